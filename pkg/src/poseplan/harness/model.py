"""The toy detector: per-landmark heads over shifted-Gaussian feature maps.

Each landmark channel gets its own tiny graph (feature stack -> affine ->
output) executed by the differentiation engine, so gradient steps on one
channel cannot move any other channel: the heads share no parameters.
Ambiguous head/trunk channels see several spatially shifted copies of
their response map, which gives the affine head enough freedom to relocate
its peak during online refinement; the remaining channels get a single
passthrough feature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..adexec import backward, execute
from ..graphcore import ComputationGraph, NodeSpec, OpKind
from ..memplanner import all_plain_plan
from ..posemath import (
    AMBIGUOUS_SET,
    DEFAULT_SIGMA_MM,
    Grid,
    HeatmapStack,
    N_LANDMARKS,
    Pose,
    encode_heatmap,
)

# Feature-map gain: with mean-per-channel loss reduction and the pinned
# refinement step size, gradient steps on the head weights only move peaks
# when the features are this hot.  Chosen so one step closes roughly a
# third of the least-squares gap while staying well inside GD stability.
BASIS_GAIN = 4.0e5
SHIFT_MM = 2.0

# Two rings of axis shifts: the reachable displacement must cover the
# corruption scale the refinement is meant to undo.
_OFFSETS = np.array(
    [(0.0, 0.0, 0.0)]
    + [
        tuple(sign * r * np.eye(3)[ax])
        for r in (SHIFT_MM, 2 * SHIFT_MM)
        for ax in range(3)
        for sign in (1.0, -1.0)
    ]
)


def _clip_to_grid(coord: np.ndarray, grid: Grid) -> np.ndarray:
    return np.clip(coord, 0.0, np.asarray(grid.extent_mm))


def _head_graph(n_basis: int, grid: Grid) -> ComputationGraph:
    shape = tuple(grid.shape)
    return ComputationGraph(
        (
            NodeSpec(0, OpKind.INPUT, (), (n_basis,) + shape, 8),
            NodeSpec(1, OpKind.AFFINE, (0,), (1,) + shape, 8),
            NodeSpec(2, OpKind.OUTPUT, (1,), (1,) + shape, 8),
        )
    )


def build_case_basis(
    pred_pose: Pose,
    grid: Grid,
    sigma: float = DEFAULT_SIGMA_MM,
    ambiguous=AMBIGUOUS_SET,
    gain: float = BASIS_GAIN,
) -> dict[int, np.ndarray]:
    """Per-landmark feature stacks derived from the simulated detector output."""
    basis: dict[int, np.ndarray] = {}
    amb = set(ambiguous)
    for i in range(1, N_LANDMARKS + 1):
        center = pred_pose.landmark(i)
        offsets = _OFFSETS if i in amb else _OFFSETS[:1]
        maps = [
            gain * encode_heatmap(_clip_to_grid(center + off, grid), grid, sigma)
            for off in offsets
        ]
        basis[i] = np.stack(maps)
    return basis


@dataclass
class ChannelHeadModel:
    grid: Grid
    graphs: dict[int, ComputationGraph]
    params: dict[int, dict]
    plans: dict[int, object]

    @classmethod
    def for_case(cls, basis: dict[int, np.ndarray], grid: Grid,
                 gain: float = BASIS_GAIN) -> "ChannelHeadModel":
        graphs, params, plans = {}, {}, {}
        for i, feats in basis.items():
            g = _head_graph(feats.shape[0], grid)
            graphs[i] = g
            plans[i] = all_plain_plan(g)
            w = np.zeros((1, feats.shape[0]))
            w[0, 0] = 1.0 / gain
            params[i] = {1: {"w": w, "b": np.zeros(1)}}
        return cls(grid=grid, graphs=graphs, params=params, plans=plans)

    def forward(self, basis: dict[int, np.ndarray]) -> HeatmapStack:
        channels = []
        for i in range(1, N_LANDMARKS + 1):
            res = execute(self.graphs[i], self.params[i], basis[i], self.plans[i])
            channels.append(res.output[0])
        return HeatmapStack(np.stack(channels), self.grid.spacing)

    def gradient_step(self, basis: dict[int, np.ndarray], stack_grad: np.ndarray,
                      step: float) -> None:
        for i in range(1, N_LANDMARKS + 1):
            gchan = stack_grad[i - 1]
            if not np.any(gchan):
                continue
            res = backward(self.graphs[i], self.params[i], basis[i], self.plans[i],
                           gchan[None])
            grads = res.param_grads[1]
            self.params[i][1]["w"] = self.params[i][1]["w"] - step * grads["w"]
            self.params[i][1]["b"] = self.params[i][1]["b"] - step * grads["b"]
