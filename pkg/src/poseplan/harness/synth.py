"""Synthetic articulated poses and corruption for end-to-end experiments.

The canonical skeleton is fetus-scaled (about 60 mm crown to pelvis) in a
frame where +z is cranial, +y is anterior and anatomical left is -x; that
orientation makes the generated side labels agree with the triple-product
resolver by construction.  Head/trunk landmarks only jitter around the
template while limb joints swing through wide random angles, mirroring how
real poses keep a stable trunk but highly mobile limbs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..posemath import AMBIGUOUS_SET, Grid, N_LANDMARKS, Pose

# The registration landmarks {2, 3, 5, 7, 9} are spread well off the
# cranio-caudal axis: near-collinear anchors would leave the registration
# rotation ill-conditioned and ruin the aligned-neighbor consensus.
TEMPLATE_MM = {
    1: (0.0, 0.0, 36.0),    # cranial_crest
    2: (0.0, -5.4, 27.6),   # skull_base
    3: (0.0, 1.8, 24.6),    # neck_center
    4: (0.0, 7.2, 30.0),    # nasal_bone
    5: (0.0, -4.2, 21.6),   # upper_spine
    6: (0.0, -5.4, 26.4),   # hind_neck
    7: (0.0, 2.4, 16.2),    # mid_spine
    8: (0.0, 5.4, 18.0),    # sternum
    9: (0.0, -3.6, 10.2),   # lower_spine
    10: (0.0, 0.6, 6.0),    # pelvis_center
    11: (-6.6, 0.0, 22.2),  # left_shoulder
    14: (6.6, 0.0, 22.2),   # right_shoulder
    17: (-3.9, 0.0, 5.4),   # left_hip
    20: (3.9, 0.0, 5.4),    # right_hip
}

UPPER_ARM_MM = 7.8
FOREARM_MM = 7.2
THIGH_MM = 9.0
SHIN_MM = 8.4

TRUNK_JITTER_MM = 1.0

DEFAULT_GRID = Grid((32, 32, 32), (2.0, 2.0, 2.0))
GRID_MARGIN_MM = 7.0


def _unit(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    n = np.linalg.norm(v)
    while n < 1e-9:
        v = rng.normal(size=3)
        n = np.linalg.norm(v)
    return v / n


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform proper rotation from a normalized random quaternion."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def template_pose() -> Pose:
    coords = np.zeros((N_LANDMARKS, 3))
    for idx, xyz in TEMPLATE_MM.items():
        coords[idx - 1] = xyz
    # limbs extended straight down in the template
    for shoulder, elbow, wrist, upper, lower in (
        (11, 12, 13, UPPER_ARM_MM, FOREARM_MM),
        (14, 15, 16, UPPER_ARM_MM, FOREARM_MM),
        (17, 18, 19, THIGH_MM, SHIN_MM),
        (20, 21, 22, THIGH_MM, SHIN_MM),
    ):
        root = coords[shoulder - 1]
        coords[elbow - 1] = root + np.array([0.0, 0.0, -upper])
        coords[wrist - 1] = coords[elbow - 1] + np.array([0.0, 0.0, -lower])
    return Pose(coords)


def _articulate(rng: np.random.Generator) -> np.ndarray:
    coords = template_pose().coords.copy()
    trunk_and_roots = list(range(1, 11)) + [11, 14, 17, 20]
    for idx in trunk_and_roots:
        coords[idx - 1] = coords[idx - 1] + rng.normal(0.0, TRUNK_JITTER_MM, size=3)
    for root, mid, tip, upper, lower in (
        (11, 12, 13, UPPER_ARM_MM, FOREARM_MM),
        (14, 15, 16, UPPER_ARM_MM, FOREARM_MM),
        (17, 18, 19, THIGH_MM, SHIN_MM),
        (20, 21, 22, THIGH_MM, SHIN_MM),
    ):
        coords[mid - 1] = coords[root - 1] + upper * _unit(rng)
        coords[tip - 1] = coords[mid - 1] + lower * _unit(rng)
    return coords


def synth_pose(seed: int, grid: Grid = DEFAULT_GRID, global_transform: bool = True) -> Pose:
    """Deterministic articulated pose, fitted inside ``grid`` with margin."""
    rng = np.random.default_rng(seed)
    coords = _articulate(rng)
    if not global_transform:
        return Pose(coords)
    center = np.asarray(grid.extent_mm) / 2.0
    for attempt in range(200):
        rot = random_rotation(rng)
        jitter = rng.uniform(-3.0, 3.0, size=3) / (1 + attempt)
        moved = (coords - coords.mean(axis=0)) @ rot.T + center + jitter
        lo = moved.min(axis=0)
        hi = moved.max(axis=0)
        if np.all(lo >= GRID_MARGIN_MM) and np.all(
            hi <= np.asarray(grid.extent_mm) - GRID_MARGIN_MM
        ):
            return Pose(moved)
    raise RuntimeError("could not fit pose inside grid; enlarge the grid")


def corrupt_pose(
    pose: Pose,
    rng: np.random.Generator,
    indices=AMBIGUOUS_SET,
    magnitude_mm: float = 5.0,
) -> Pose:
    """Displace each listed landmark by ``magnitude_mm`` in a random direction."""
    updates = {i: pose.landmark(i) + magnitude_mm * _unit(rng) for i in indices}
    return pose.with_landmarks(updates)


def swap_group(pose: Pose, left_ids, right_ids) -> Pose:
    updates = {}
    for li, ri in zip(left_ids, right_ids):
        updates[li] = pose.landmark(ri)
        updates[ri] = pose.landmark(li)
    return pose.with_landmarks(updates)


@dataclass(frozen=True)
class SyntheticCase:
    seed: int
    gt_pose: Pose
    pred_pose: Pose  # the simulated detector output before refinement
    grid: Grid
    corruption: dict = field(default_factory=dict)


def make_case(
    seed: int,
    grid: Grid = DEFAULT_GRID,
    corrupt_indices=AMBIGUOUS_SET,
    corrupt_mm: float = 5.0,
    swap_arms: bool = False,
    swap_legs: bool = False,
) -> SyntheticCase:
    gt = synth_pose(seed, grid)
    rng = np.random.default_rng((seed + 1) * 7919)
    pred = corrupt_pose(gt, rng, corrupt_indices, corrupt_mm) if corrupt_mm > 0 else gt
    if swap_arms:
        pred = swap_group(pred, (11, 12, 13), (14, 15, 16))
    if swap_legs:
        pred = swap_group(pred, (17, 18, 19), (20, 21, 22))
    return SyntheticCase(
        seed=seed,
        gt_pose=gt,
        pred_pose=pred,
        grid=grid,
        corruption={
            "indices": list(corrupt_indices),
            "magnitude_mm": corrupt_mm,
            "swap_arms": swap_arms,
            "swap_legs": swap_legs,
        },
    )
