"""Geometric left/right resolution from the head frame.

The frame is built from the cranial crest (landmark 1), the nasal bone (4)
and the hind neck (6).  For two unlabeled side candidates a and b,

    ang = ((p4 - p1) x (p6 - p1)) . (b - a)

assigns a to the left side when ang <= 0 (boundary inclusive) and to the
right otherwise.  The sign of the scalar triple product is invariant under
proper rigid motion and flips under reflection, so mirrored poses swap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateFrame

FRAME_EPS_MM2 = 1e-9

ARM_SIDES = (11, 14)  # (left shoulder, right shoulder)
LEG_SIDES = (17, 20)  # (left hip, right hip)


@dataclass(frozen=True)
class SideAssignment:
    """Landmark indices assigned to candidates (s1 -> a, s2 -> b)."""

    s1: int
    s2: int
    ang: float

    @property
    def a_is_left(self) -> bool:
        return self.s1 in (ARM_SIDES[0], LEG_SIDES[0])


def resolve_left_right(p1, p4, p6, cand_a, cand_b, pair_kind: str = "arms") -> SideAssignment:
    if pair_kind not in ("arms", "legs"):
        raise ValueError("pair_kind must be 'arms' or 'legs'")
    p1 = np.asarray(p1, dtype=np.float64)
    p4 = np.asarray(p4, dtype=np.float64)
    p6 = np.asarray(p6, dtype=np.float64)
    a = np.asarray(cand_a, dtype=np.float64)
    b = np.asarray(cand_b, dtype=np.float64)

    normal = np.cross(p4 - p1, p6 - p1)
    if np.linalg.norm(normal) <= FRAME_EPS_MM2:
        raise DegenerateFrame("frame landmarks 1, 4, 6 are (near-)collinear")
    ang = float(np.dot(normal, b - a))
    left, right = ARM_SIDES if pair_kind == "arms" else LEG_SIDES
    if ang <= 0:
        return SideAssignment(left, right, ang)
    return SideAssignment(right, left, ang)
