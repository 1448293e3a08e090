"""FastAPI wiring around the handlers."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from ..errors import PosePlanError
from . import handlers
from . import schemas as sc

app = FastAPI(
    title="poseplan",
    description="Memory-aware graph planning and articulated landmark analytics",
)


def _guard(fn, req):
    try:
        return fn(req)
    except PosePlanError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/plan", response_model=sc.PlanResponse)
def plan_route(req: sc.PlanRequest) -> sc.PlanResponse:
    return _guard(handlers.handle_plan, req)


@app.post("/check-grads", response_model=sc.CheckGradsResponse)
def check_grads_route(req: sc.CheckGradsRequest) -> sc.CheckGradsResponse:
    return _guard(handlers.handle_check_grads, req)


@app.post("/loss", response_model=sc.LossResponse)
def loss_route(req: sc.LossRequest) -> sc.LossResponse:
    return _guard(handlers.handle_loss, req)


@app.post("/synth", response_model=sc.SynthResponse)
def synth_route(req: sc.SynthRequest) -> sc.SynthResponse:
    return _guard(handlers.handle_synth, req)


@app.post("/eval", response_model=sc.EvalResponse)
def eval_route(req: sc.EvalRequest) -> sc.EvalResponse:
    return _guard(handlers.handle_eval, req)


@app.post("/refine", response_model=sc.RefineResponse)
def refine_route(req: sc.RefineRequest) -> sc.RefineResponse:
    return _guard(handlers.handle_refine, req)


@app.post("/pipeline", response_model=sc.PipelineResponse)
def pipeline_route(req: sc.PipelineRequest) -> sc.PipelineResponse:
    return _guard(handlers.handle_pipeline, req)
