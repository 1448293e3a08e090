"""The reference pose library (shape prior) and top-K retrieval."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..errors import LibraryTooSmall
from ..posemath import Pose, REGISTRATION_SET, load_pose, save_pose
from .registration import RigidTransform, register, registration_error

DEFAULT_TOP_K = 8


@dataclass(frozen=True)
class PoseLibrary:
    poses: tuple[Pose, ...]

    def __post_init__(self):
        object.__setattr__(self, "poses", tuple(self.poses))

    def __len__(self) -> int:
        return len(self.poses)


def retrieve_topk(
    lib: PoseLibrary,
    predicted: Pose,
    k: int = DEFAULT_TOP_K,
    landmark_set=REGISTRATION_SET,
) -> list[tuple[Pose, RigidTransform]]:
    """The k library poses with the smallest post-registration residual on
    the landmark set, ascending; ties break by library index."""
    if k < 1:
        raise ValueError("k must be positive")
    if len(lib) < k:
        raise LibraryTooSmall(f"library holds {len(lib)} poses, need {k}")
    scored = []
    for idx, pose in enumerate(lib.poses):
        t = register(pose, predicted, landmark_set)
        scored.append((registration_error(t, pose, predicted, landmark_set), idx, pose, t))
    scored.sort(key=lambda item: (item[0], item[1]))
    return [(pose, t) for _, _, pose, t in scored[:k]]


def save_library(lib: PoseLibrary, directory: str | Path) -> None:
    """One pose file per entry plus a manifest listing them in order."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = []
    for i, pose in enumerate(lib.poses):
        name = f"pose_{i:04d}.csv"
        save_pose(pose, directory / name)
        names.append(name)
    manifest = {"format": "poseplan-library", "poses": names}
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n",
                                             encoding="utf-8")


def load_library(directory: str | Path) -> PoseLibrary:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    return PoseLibrary(tuple(load_pose(directory / name) for name in manifest["poses"]))
