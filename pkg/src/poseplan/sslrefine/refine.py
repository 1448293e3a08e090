"""Online refinement of ambiguous head/trunk landmarks.

Each iteration registers the pose library to the current prediction,
retrieves the top-K neighbors, blends the prediction with the aligned
neighbor consensus into a pseudo-label, and takes one gradient step of the
pseudo-label loss on the model.  The pseudo-label is recomputed every
iteration so it tracks the improving prediction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from ..posemath import (
    AMBIGUOUS_SET,
    DEFAULT_SIGMA_MM,
    HeatmapStack,
    Pose,
    REGISTRATION_SET,
    encode_heatmap,
)
from .library import DEFAULT_TOP_K, PoseLibrary, retrieve_topk

REFINE_ITERS = 8
REFINE_STEP = 5e-4


@dataclass(frozen=True)
class PseudoLabel:
    """Blended target coordinates for the ambiguous landmark indices."""

    points: dict[int, np.ndarray]

    def __post_init__(self):
        pts = {int(i): np.asarray(p, dtype=np.float64) for i, p in self.points.items()}
        object.__setattr__(self, "points", pts)


def pseudo_label(predicted: Pose, aligned_neighbors, indices=AMBIGUOUS_SET) -> PseudoLabel:
    """Midpoint of the prediction and the aligned neighbor mean, per index."""
    if not aligned_neighbors:
        raise ValueError("at least one aligned neighbor required")
    stack = np.stack([p.coords for p in aligned_neighbors])
    consensus = stack.mean(axis=0)
    return PseudoLabel(
        {i: 0.5 * (predicted.landmark(i) + consensus[i - 1]) for i in indices}
    )


def ssl_loss(pred_stack: HeatmapStack, label: PseudoLabel,
             sigma: float = DEFAULT_SIGMA_MM) -> float:
    """Mean over the ambiguous channels of the per-channel mean squared
    difference between the encoded pseudo-label and the prediction."""
    grid = pred_stack.grid
    total = 0.0
    for i, point in sorted(label.points.items()):
        target = encode_heatmap(point, grid, sigma)
        diff = pred_stack.channel(i) - target
        total += float(np.mean(diff * diff))
    return total / len(label.points)


def ssl_loss_grad(pred_stack: HeatmapStack, label: PseudoLabel,
                  sigma: float = DEFAULT_SIGMA_MM) -> np.ndarray:
    grid = pred_stack.grid
    grad = np.zeros_like(pred_stack.data)
    n_voxels = pred_stack.data[0].size
    scale = 2.0 / (len(label.points) * n_voxels)
    for i, point in sorted(label.points.items()):
        target = encode_heatmap(point, grid, sigma)
        grad[i - 1] = scale * (pred_stack.channel(i) - target)
    return grad


class RefinableModel(Protocol):
    """A differentiable heatmap producer (adexec-backed in the harness)."""

    def forward(self, model_input) -> HeatmapStack: ...

    def gradient_step(self, model_input, stack_grad: np.ndarray, step: float) -> None: ...


@dataclass
class RefineResult:
    initial_pose: Pose
    refined_pose: Pose
    losses: list[float] = field(default_factory=list)

    @property
    def final_stack_pose(self) -> Pose:
        return self.refined_pose


def refine(
    model: RefinableModel,
    model_input,
    lib: PoseLibrary,
    iters: int = REFINE_ITERS,
    step: float = REFINE_STEP,
    k: int = DEFAULT_TOP_K,
    sigma: float = DEFAULT_SIGMA_MM,
    registration_set=REGISTRATION_SET,
    ambiguous=AMBIGUOUS_SET,
) -> RefineResult:
    initial_pose: Pose | None = None
    losses: list[float] = []
    for _ in range(iters):
        stack = model.forward(model_input)
        predicted = stack.decode_pose()
        if initial_pose is None:
            initial_pose = predicted
        neighbors = retrieve_topk(lib, predicted, k, registration_set)
        aligned = [t.apply_pose(p) for p, t in neighbors]
        label = pseudo_label(predicted, aligned, ambiguous)
        losses.append(ssl_loss(stack, label, sigma))
        model.gradient_step(model_input, ssl_loss_grad(stack, label, sigma), step)
    final_stack = model.forward(model_input)
    final_pose = final_stack.decode_pose()
    if initial_pose is None:
        initial_pose = final_pose
    return RefineResult(initial_pose=initial_pose, refined_pose=final_pose, losses=losses)
