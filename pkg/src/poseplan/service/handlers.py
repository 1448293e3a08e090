"""Pure request -> response handlers shared by the HTTP app and the CLI."""

from __future__ import annotations

import numpy as np

from ..adexec import check_gradients
from ..harness import (
    ChannelHeadModel,
    build_case_basis,
    ed_error,
    make_case,
    pck_auc,
    run_pipeline,
)
from ..memplanner import plan, plan_report
from ..posemath import LANDMARK_NAMES, encode_pose_stack, total_loss_terms
from ..sslrefine import PoseLibrary, refine
from . import schemas as sc


def handle_plan(req: sc.PlanRequest) -> sc.PlanResponse:
    g = req.graph.to_graph()
    report = plan_report(g, plan(g), include_events=req.include_events)
    return sc.PlanResponse(
        parts=[sc.PartModel(**p) for p in report["parts"]],
        peak_bytes=report["peak_bytes"],
        all_plain_peak_bytes=report["all_plain_peak_bytes"],
        peak_pct_of_plain=report["peak_pct_of_plain"],
        reduction_pct=report["reduction_pct"],
        events=[sc.EventModel(**e) for e in report["events"]] if req.include_events else None,
    )


def handle_check_grads(req: sc.CheckGradsRequest) -> sc.CheckGradsResponse:
    report = check_gradients(req.graph.to_graph(), req.seed, run_fd=req.run_fd)
    return sc.CheckGradsResponse(
        plans=[sc.PlanCheckModel(**row) for row in report["plans"]],
        fd_max_rel_dev=report.get("fd_max_rel_dev"),
        ok=report["ok"],
    )


def _as_stack(pose_model, stack_model, grid, sigma):
    if stack_model is not None:
        return stack_model.to_stack()
    return encode_pose_stack(pose_model.to_pose(), grid, sigma)


def handle_loss(req: sc.LossRequest) -> sc.LossResponse:
    grid = req.grid.to_grid()
    pred = _as_stack(req.pred_pose, req.pred_stack, grid, req.sigma_mm)
    gt = _as_stack(req.gt_pose, req.gt_stack, grid, req.sigma_mm)
    return sc.LossResponse(terms=total_loss_terms(pred, gt))


def handle_synth(req: sc.SynthRequest) -> sc.SynthResponse:
    case = make_case(
        req.seed,
        req.grid.to_grid(),
        tuple(req.corrupt_indices),
        req.corrupt_mm,
        swap_arms=req.swap_arms,
        swap_legs=req.swap_legs,
    )
    return sc.SynthResponse(
        gt_pose=sc.PoseModel.from_pose(case.gt_pose),
        pred_pose=sc.PoseModel.from_pose(case.pred_pose),
        landmark_names=list(LANDMARK_NAMES),
    )


def handle_eval(req: sc.EvalRequest) -> sc.EvalResponse:
    if req.errors_mm is not None:
        errors = np.asarray(req.errors_mm, dtype=np.float64)
    else:
        errors = np.stack(
            [
                ed_error(p.to_pose(), g.to_pose())
                for p, g in zip(req.pred_poses, req.gt_poses)
            ]
        )
    report = pck_auc(errors, req.tau_max_mm, req.delta_mm)
    return sc.EvalResponse(**report.to_dict())


def handle_refine(req: sc.RefineRequest) -> sc.RefineResponse:
    grid = req.grid.to_grid()
    if req.pred_pose is not None:
        pred_pose = req.pred_pose.to_pose()
    else:
        pred_pose = req.pred_stack.to_stack().decode_pose()
    basis = build_case_basis(pred_pose, grid, req.sigma_mm)
    model = ChannelHeadModel.for_case(basis, grid)
    lib = PoseLibrary(tuple(p.to_pose() for p in req.library))
    result = refine(
        model,
        basis,
        lib,
        iters=req.iters,
        step=req.step,
        k=req.top_k,
        sigma=req.sigma_mm,
    )
    moved = np.linalg.norm(
        result.refined_pose.coords - result.initial_pose.coords, axis=1
    )
    return sc.RefineResponse(
        before=sc.PoseModel.from_pose(result.initial_pose),
        after=sc.PoseModel.from_pose(result.refined_pose),
        moved_mm_per_landmark=[float(v) for v in moved],
        ssl_losses=[float(v) for v in result.losses],
    )


def handle_pipeline(req: sc.PipelineRequest) -> sc.PipelineResponse:
    return sc.PipelineResponse(report=run_pipeline(req.config))
