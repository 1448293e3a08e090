"""End-to-end synthetic experiment: generate cases, simulate the detector,
evaluate losses, resolve sides, refine online, and aggregate metrics.

Reports are plain dicts of JSON-safe values built in a fixed order, so a
rerun with the same config is byte-identical once serialized with sorted
keys.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from ..errors import ConfigError
from ..memplanner import plan, plan_report
from ..posemath import (
    DEFAULT_SIGMA_MM,
    Grid,
    Pose,
    encode_pose_stack,
    resolve_left_right,
    total_loss_terms,
)
from ..sslrefine import PoseLibrary, refine
from .metrics import PCK_DELTA_MM, PCK_TAU_MAX_MM, ed_error, pck_auc
from .model import ChannelHeadModel, build_case_basis
from .synth import DEFAULT_GRID, make_case, synth_pose
from .unet import build_unet_graph


class GridConfig(BaseModel):
    shape: tuple[int, int, int] = DEFAULT_GRID.shape
    spacing_mm: tuple[float, float, float] = DEFAULT_GRID.spacing

    def build(self) -> Grid:
        return Grid(self.shape, self.spacing_mm)


class CorruptionConfig(BaseModel):
    indices: tuple[int, ...] = (1, 4, 6, 8, 10)
    magnitude_mm: float = 5.0


class RefineConfig(BaseModel):
    iters: int = 8
    step: float = 5e-4
    top_k: int = 8
    library_size: int = 50


class PckConfig(BaseModel):
    tau_max_mm: float = PCK_TAU_MAX_MM
    delta_mm: float = PCK_DELTA_MM


class PipelineConfig(BaseModel):
    seed: int = 0
    cases: int = Field(default=20, ge=1)
    sigma_mm: float = DEFAULT_SIGMA_MM
    grid: GridConfig = GridConfig()
    corruption: CorruptionConfig = CorruptionConfig()
    refine: RefineConfig = RefineConfig()
    pck: PckConfig = PckConfig()
    pair_eval: bool = False
    include_plan_report: bool = True


def load_pipeline_config(path: str | Path) -> PipelineConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    try:
        return PipelineConfig.model_validate(doc)
    except ValidationError as exc:
        locs = "; ".join(
            ".".join(str(p) for p in err["loc"]) + ": " + err["msg"]
            for err in exc.errors()
        )
        raise ConfigError(f"{path}: {locs}") from exc


def build_library(seed: int, size: int, grid: Grid) -> PoseLibrary:
    return PoseLibrary(tuple(synth_pose(seed + 100_000 + i, grid) for i in range(size)))


def apply_side_resolution(pose: Pose) -> Pose:
    """Reassign arm/leg groups to sides using the head-frame rule, taking the
    group roots (shoulders/hips) as the side candidates."""
    p1, p4, p6 = pose.landmark(1), pose.landmark(4), pose.landmark(6)
    out = pose
    for kind, left_ids, right_ids in (
        ("arms", (11, 12, 13), (14, 15, 16)),
        ("legs", (17, 18, 19), (20, 21, 22)),
    ):
        sa = resolve_left_right(
            p1, p4, p6, out.landmark(left_ids[0]), out.landmark(right_ids[0]), kind
        )
        if sa.s1 == right_ids[0]:  # the group in the left slots is really the right side
            updates = {}
            for li, ri in zip(left_ids, right_ids):
                updates[li] = out.landmark(ri)
                updates[ri] = out.landmark(li)
            out = out.with_landmarks(updates)
    return out


def run_pipeline(config: PipelineConfig) -> dict:
    grid = config.grid.build()
    sigma = config.sigma_mm
    lib = build_library(config.seed, config.refine.library_size, grid)

    eds_initial, eds_resolved, eds_refined = [], [], []
    loss_totals = []
    for i in range(config.cases):
        case = make_case(
            config.seed + i,
            grid,
            config.corruption.indices,
            config.corruption.magnitude_mm,
            swap_arms=config.pair_eval,
            swap_legs=config.pair_eval,
        )
        basis = build_case_basis(case.pred_pose, grid, sigma)
        model = ChannelHeadModel.for_case(basis, grid)
        stack0 = model.forward(basis)
        pred0 = stack0.decode_pose()
        gt_stack = encode_pose_stack(case.gt_pose, grid, sigma)
        loss_totals.append(total_loss_terms(stack0, gt_stack)["total"])
        eds_initial.append(ed_error(pred0, case.gt_pose))

        resolved = apply_side_resolution(pred0) if config.pair_eval else pred0
        eds_resolved.append(ed_error(resolved, case.gt_pose))

        result = refine(
            model,
            basis,
            lib,
            iters=config.refine.iters,
            step=config.refine.step,
            k=config.refine.top_k,
            sigma=sigma,
        )
        refined = result.refined_pose
        if config.pair_eval:
            refined = apply_side_resolution(refined)
        eds_refined.append(ed_error(refined, case.gt_pose))

    eds_initial = np.stack(eds_initial)
    eds_resolved = np.stack(eds_resolved)
    eds_refined = np.stack(eds_refined)
    rep_initial = pck_auc(eds_initial, config.pck.tau_max_mm, config.pck.delta_mm)
    rep_refined = pck_auc(eds_refined, config.pck.tau_max_mm, config.pck.delta_mm)

    report = {
        "config": json.loads(config.model_dump_json()),
        "cases": config.cases,
        "mean_total_loss": float(np.mean(loss_totals)),
        "initial": rep_initial.to_dict(),
        "refined": rep_refined.to_dict(),
    }
    if config.pair_eval:
        rep_resolved = pck_auc(eds_resolved, config.pck.tau_max_mm, config.pck.delta_mm)
        report["side_resolved"] = rep_resolved.to_dict()
    if config.include_plan_report:
        g = build_unet_graph()
        report["plan"] = plan_report(g, plan(g), include_events=False)
    return report


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
