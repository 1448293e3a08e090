"""Request/response models for the service layer.

The CLI builds these same models and either calls the handlers in-process
or posts them to a running server, so the wire format and the library
surface stay in lockstep.
"""

from __future__ import annotations

import base64

import numpy as np
from pydantic import BaseModel, Field, model_validator

from ..graphcore import ComputationGraph, NodeSpec, OpKind, graph_to_dict
from ..harness import PipelineConfig
from ..posemath import Grid, HeatmapStack, N_LANDMARKS, Pose


class NodeModel(BaseModel):
    id: int
    op: str
    inputs: list[int] = Field(default_factory=list)
    shape: list[int]
    elem_bytes: int = 4
    split_half: int = 0


class GraphModel(BaseModel):
    nodes: list[NodeModel]

    @classmethod
    def from_graph(cls, g: ComputationGraph) -> "GraphModel":
        return cls.model_validate(graph_to_dict(g))

    def to_graph(self) -> ComputationGraph:
        return ComputationGraph(
            tuple(
                NodeSpec(
                    id=n.id,
                    op=OpKind(n.op),
                    inputs=tuple(n.inputs),
                    shape=tuple(n.shape),
                    elem_bytes=n.elem_bytes,
                    split_half=n.split_half,
                )
                for n in self.nodes
            )
        )


class GridModel(BaseModel):
    shape: tuple[int, int, int] = (32, 32, 32)
    spacing_mm: tuple[float, float, float] = (2.0, 2.0, 2.0)

    def to_grid(self) -> Grid:
        return Grid(self.shape, self.spacing_mm)

    @classmethod
    def from_grid(cls, grid: Grid) -> "GridModel":
        return cls(shape=grid.shape, spacing_mm=grid.spacing)


class PoseModel(BaseModel):
    landmarks_mm: list[tuple[float, float, float]]

    @model_validator(mode="after")
    def _count(self):
        if len(self.landmarks_mm) != N_LANDMARKS:
            raise ValueError(f"pose needs {N_LANDMARKS} landmarks")
        return self

    @classmethod
    def from_pose(cls, pose: Pose) -> "PoseModel":
        return cls(landmarks_mm=[tuple(map(float, row)) for row in pose.coords])

    def to_pose(self) -> Pose:
        return Pose(np.asarray(self.landmarks_mm, dtype=np.float64))


class StackModel(BaseModel):
    """Raw little-endian float32 voxels (C order), base64-encoded."""

    shape: tuple[int, int, int, int]
    spacing_mm: tuple[float, float, float] = (1.0, 1.0, 1.0)
    data_b64: str

    @classmethod
    def from_stack(cls, stack: HeatmapStack) -> "StackModel":
        payload = np.ascontiguousarray(stack.data, dtype="<f4").tobytes()
        return cls(
            shape=tuple(stack.data.shape),
            spacing_mm=stack.spacing,
            data_b64=base64.b64encode(payload).decode("ascii"),
        )

    def to_stack(self) -> HeatmapStack:
        data = np.frombuffer(base64.b64decode(self.data_b64), dtype="<f4")
        return HeatmapStack(
            data.reshape(self.shape).astype(np.float64), self.spacing_mm
        )


class PlanRequest(BaseModel):
    graph: GraphModel
    include_events: bool = False
    seed: int = 0  # accepted for interface uniformity; planning is seed-free


class EventModel(BaseModel):
    event: str
    tensor: str
    node: int
    live_bytes: int


class PartModel(BaseModel):
    nodes: list[int]
    mode: str


class PlanResponse(BaseModel):
    parts: list[PartModel]
    peak_bytes: int
    all_plain_peak_bytes: int
    peak_pct_of_plain: float
    reduction_pct: float
    events: list[EventModel] | None = None


class CheckGradsRequest(BaseModel):
    graph: GraphModel
    seed: int = 0
    run_fd: bool = True


class PlanCheckModel(BaseModel):
    plan: str
    peak_bytes: int
    sim_peak_bytes: int
    trace_matches_sim: bool
    max_output_abs_dev: float
    max_grad_rel_dev: float


class CheckGradsResponse(BaseModel):
    plans: list[PlanCheckModel]
    fd_max_rel_dev: float | None = None
    ok: bool


class LossRequest(BaseModel):
    pred_pose: PoseModel | None = None
    pred_stack: StackModel | None = None
    gt_pose: PoseModel | None = None
    gt_stack: StackModel | None = None
    grid: GridModel = GridModel()
    sigma_mm: float = 2.0
    seed: int = 0

    @model_validator(mode="after")
    def _one_of_each(self):
        if (self.pred_pose is None) == (self.pred_stack is None):
            raise ValueError("provide exactly one of pred_pose/pred_stack")
        if (self.gt_pose is None) == (self.gt_stack is None):
            raise ValueError("provide exactly one of gt_pose/gt_stack")
        return self


class LossResponse(BaseModel):
    terms: dict[str, float]


class SynthRequest(BaseModel):
    seed: int = 0
    grid: GridModel = GridModel()
    corrupt_mm: float = 0.0
    corrupt_indices: list[int] = Field(default_factory=lambda: [1, 4, 6, 8, 10])
    swap_arms: bool = False
    swap_legs: bool = False


class SynthResponse(BaseModel):
    gt_pose: PoseModel
    pred_pose: PoseModel
    landmark_names: list[str]


class EvalRequest(BaseModel):
    pred_poses: list[PoseModel] | None = None
    gt_poses: list[PoseModel] | None = None
    errors_mm: list[list[float]] | None = None
    tau_max_mm: float = 10.0
    delta_mm: float = 0.25
    seed: int = 0

    @model_validator(mode="after")
    def _source(self):
        have_poses = self.pred_poses is not None and self.gt_poses is not None
        if have_poses == (self.errors_mm is not None):
            raise ValueError("provide either pred/gt poses or an error matrix")
        if have_poses and len(self.pred_poses) != len(self.gt_poses):
            raise ValueError("pred and gt pose counts differ")
        return self


class EvalResponse(BaseModel):
    thresholds_mm: list[float]
    pck_per_landmark: list[list[float]]
    auc_per_landmark: list[float]
    mean_auc: float
    mean_ed_per_landmark: list[float]
    overall_mean_ed: float


class RefineRequest(BaseModel):
    library: list[PoseModel]
    pred_pose: PoseModel | None = None
    pred_stack: StackModel | None = None
    grid: GridModel = GridModel()
    sigma_mm: float = 2.0
    iters: int = 8
    step: float = 5e-4
    top_k: int = 8
    seed: int = 0

    @model_validator(mode="after")
    def _one_pred(self):
        if (self.pred_pose is None) == (self.pred_stack is None):
            raise ValueError("provide exactly one of pred_pose/pred_stack")
        return self


class RefineResponse(BaseModel):
    before: PoseModel
    after: PoseModel
    moved_mm_per_landmark: list[float]
    ssl_losses: list[float]


class PipelineRequest(BaseModel):
    config: PipelineConfig = PipelineConfig()


class PipelineResponse(BaseModel):
    report: dict
