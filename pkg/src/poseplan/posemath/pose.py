"""Poses: 22 named 3D landmarks in millimeters.

Landmark indices are 1-based throughout the public API.  The five groups
are head/trunk (1-10), left arm (11-13), right arm (14-16), left leg
(17-19) and right leg (20-22).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ShapeMismatch

N_LANDMARKS = 22

LANDMARK_NAMES = (
    "cranial_crest",
    "skull_base",
    "neck_center",
    "nasal_bone",
    "upper_spine",
    "hind_neck",
    "mid_spine",
    "sternum",
    "lower_spine",
    "pelvis_center",
    "left_shoulder",
    "left_elbow",
    "left_wrist",
    "right_shoulder",
    "right_elbow",
    "right_wrist",
    "left_hip",
    "left_knee",
    "left_ankle",
    "right_hip",
    "right_knee",
    "right_ankle",
)

HEAD_TRUNK = tuple(range(1, 11))
LEFT_ARM = (11, 12, 13)
RIGHT_ARM = (14, 15, 16)
LEFT_LEG = (17, 18, 19)
RIGHT_LEG = (20, 21, 22)

# Stable landmarks used to register reference poses, and the ambiguous
# head/trunk landmarks eligible for online refinement.
REGISTRATION_SET = (2, 3, 5, 7, 9)
AMBIGUOUS_SET = (1, 4, 6, 8, 10)


@dataclass(frozen=True)
class Pose:
    coords: np.ndarray  # (22, 3) float64, millimeters

    def __post_init__(self):
        arr = np.asarray(self.coords, dtype=np.float64)
        if arr.shape != (N_LANDMARKS, 3):
            raise ShapeMismatch(f"pose must be ({N_LANDMARKS}, 3), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ShapeMismatch("pose coordinates must be finite")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)

    def landmark(self, index: int) -> np.ndarray:
        return self.coords[index - 1]

    def take(self, indices) -> np.ndarray:
        return self.coords[[i - 1 for i in indices]]

    def with_landmarks(self, updates: dict[int, np.ndarray]) -> "Pose":
        arr = self.coords.copy()
        for idx, xyz in updates.items():
            arr[idx - 1] = np.asarray(xyz, dtype=np.float64)
        return Pose(arr)

    def transformed(self, rotation: np.ndarray, translation: np.ndarray) -> "Pose":
        return Pose(self.coords @ np.asarray(rotation).T + np.asarray(translation))


def dumps_pose(pose: Pose) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", "name", "x_mm", "y_mm", "z_mm"])
    for i, name in enumerate(LANDMARK_NAMES, start=1):
        x, y, z = pose.landmark(i)
        writer.writerow([i, name, repr(float(x)), repr(float(y)), repr(float(z))])
    return buf.getvalue()


def loads_pose(text: str) -> Pose:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if rows and rows[0] and rows[0][0].strip().lower() == "index":
        rows = rows[1:]
    if len(rows) != N_LANDMARKS:
        raise ShapeMismatch(f"pose file must contain {N_LANDMARKS} landmark rows")
    coords = np.zeros((N_LANDMARKS, 3))
    for row in rows:
        idx = int(row[0])
        if not 1 <= idx <= N_LANDMARKS:
            raise ShapeMismatch(f"landmark index {idx} out of range")
        coords[idx - 1] = [float(row[2]), float(row[3]), float(row[4])]
    return Pose(coords)


def save_pose(pose: Pose, path: str | Path) -> None:
    Path(path).write_text(dumps_pose(pose), encoding="utf-8")


def load_pose(path: str | Path) -> Pose:
    return loads_pose(Path(path).read_text(encoding="utf-8"))
