"""Closed-form rigid least-squares registration (orthogonal Procrustes with
a determinant correction, scale fixed at 1)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateConfiguration
from ..posemath import REGISTRATION_SET, Pose

COLLINEAR_EPS = 1e-9


@dataclass(frozen=True)
class RigidTransform:
    rotation: np.ndarray  # (3, 3), orthonormal, det +1
    translation: np.ndarray  # (3,), millimeters

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64)
        if r.shape != (3, 3) or t.shape != (3,):
            raise ValueError("rigid transform needs a 3x3 rotation and a 3-vector")
        if np.max(np.abs(r.T @ r - np.eye(3))) > 1e-9 or abs(np.linalg.det(r) - 1.0) > 1e-9:
            raise ValueError("rotation must be orthonormal with determinant +1")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ self.rotation.T + self.translation

    def apply_pose(self, pose: Pose) -> Pose:
        return Pose(self.apply(pose.coords))


def _check_not_collinear(points: np.ndarray, label: str) -> None:
    centered = points - points.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    if len(s) < 2 or s[1] <= COLLINEAR_EPS * max(s[0], 1.0):
        raise DegenerateConfiguration(f"{label} registration landmarks are (near-)collinear")


def register(src: Pose, dst: Pose, landmark_set=REGISTRATION_SET) -> RigidTransform:
    """Least-squares rigid transform taking src's landmarks onto dst's."""
    ids = tuple(landmark_set)
    if len(ids) < 3:
        raise DegenerateConfiguration("registration needs at least three landmarks")
    a = src.take(ids)
    b = dst.take(ids)
    _check_not_collinear(a, "source")
    _check_not_collinear(b, "target")

    ca = a.mean(axis=0)
    cb = b.mean(axis=0)
    h = (a - ca).T @ (b - cb)
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    rot = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    return RigidTransform(rot, cb - rot @ ca)


def registration_error(transform: RigidTransform, src: Pose, dst: Pose,
                       landmark_set=REGISTRATION_SET) -> float:
    """Sum over the landmark set of per-landmark Euclidean residual norms."""
    ids = tuple(landmark_set)
    moved = transform.apply(src.take(ids))
    return float(np.linalg.norm(moved - dst.take(ids), axis=1).sum())
