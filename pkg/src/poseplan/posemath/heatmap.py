"""Voxel heatmaps: Gaussian encoding, argmax decoding, and stack files.

A landmark at millimeter point (x, y, z) encodes on a (D, H, W) grid with
per-axis spacing as

    H(i, j, k) = (sqrt(2*pi) * sigma)**-3
                 * exp(-(d_x**2 + d_y**2 + d_z**2) / (2 * sigma**2))

where d are millimeter offsets between the voxel center and the point.
With unit spacing this is the plain voxel-coordinate form; sigma defaults
to 2 mm.  Decoding takes the maximum voxel, ties broken by the lowest
linearized (C-order) index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import OutOfGrid, ShapeMismatch
from .pose import N_LANDMARKS, Pose

DEFAULT_SIGMA_MM = 2.0


@dataclass(frozen=True)
class Grid:
    shape: tuple[int, int, int]
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))
        if len(self.shape) != 3 or any(s < 1 for s in self.shape):
            raise ShapeMismatch("grid shape must be three positive extents")
        if any(s <= 0 for s in self.spacing):
            raise ShapeMismatch("grid spacing must be positive")

    @property
    def extent_mm(self) -> tuple[float, float, float]:
        return tuple((n - 1) * s for n, s in zip(self.shape, self.spacing))

    def contains(self, coord) -> bool:
        c = np.asarray(coord, dtype=np.float64)
        return bool(np.all(c >= 0) and np.all(c <= np.asarray(self.extent_mm)))

    def voxel_to_mm(self, ijk) -> np.ndarray:
        return np.asarray(ijk, dtype=np.float64) * np.asarray(self.spacing)

    def nearest_voxel(self, coord) -> tuple[int, int, int]:
        c = np.asarray(coord, dtype=np.float64) / np.asarray(self.spacing)
        idx = np.clip(np.rint(c).astype(int), 0, np.asarray(self.shape) - 1)
        return tuple(int(v) for v in idx)


def gaussian_amplitude(sigma: float) -> float:
    return float((2.0 * np.pi) ** -1.5 * sigma**-3)


def encode_heatmap(coord, grid: Grid, sigma: float = DEFAULT_SIGMA_MM) -> np.ndarray:
    """Single-channel heatmap for one millimeter point."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    c = np.asarray(coord, dtype=np.float64)
    if not grid.contains(c):
        raise OutOfGrid(f"coordinate {c.tolist()} outside grid extent {grid.extent_mm}")
    axes = [
        (np.arange(n) * s - c[a]) ** 2
        for a, (n, s) in enumerate(zip(grid.shape, grid.spacing))
    ]
    sq = axes[0][:, None, None] + axes[1][None, :, None] + axes[2][None, None, :]
    return gaussian_amplitude(sigma) * np.exp(-sq / (2.0 * sigma**2))


def decode_argmax(channel: np.ndarray, grid: Grid) -> np.ndarray:
    """Millimeter point of the maximum voxel (first maximum in C order)."""
    if channel.size == 0:
        raise ShapeMismatch("cannot decode an empty heatmap")
    flat_idx = int(np.argmax(channel))
    ijk = np.unravel_index(flat_idx, channel.shape)
    return grid.voxel_to_mm(ijk)


@dataclass(frozen=True)
class HeatmapStack:
    data: np.ndarray  # (22, D, H, W) float64
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 4 or arr.shape[0] != N_LANDMARKS:
            raise ShapeMismatch(f"stack must be ({N_LANDMARKS}, D, H, W), got {arr.shape}")
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))

    @property
    def grid(self) -> Grid:
        return Grid(self.data.shape[1:], self.spacing)

    def channel(self, index: int) -> np.ndarray:
        return self.data[index - 1]

    def decode_pose(self) -> Pose:
        grid = self.grid
        return Pose(np.stack([decode_argmax(self.data[i], grid) for i in range(N_LANDMARKS)]))


def encode_pose_stack(pose: Pose, grid: Grid, sigma: float = DEFAULT_SIGMA_MM) -> HeatmapStack:
    data = np.stack(
        [encode_heatmap(pose.landmark(i), grid, sigma) for i in range(1, N_LANDMARKS + 1)]
    )
    return HeatmapStack(data, grid.spacing)


def _sidecar_path(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def save_stack(stack: HeatmapStack, path: str | Path) -> None:
    """Raw little-endian float32 voxels (C order) plus a JSON sidecar header."""
    path = Path(path)
    path.write_bytes(np.ascontiguousarray(stack.data, dtype="<f4").tobytes())
    header = {
        "shape": list(stack.data.shape),
        "spacing": list(stack.spacing),
        "dtype": "<f4",
        "order": "C",
    }
    _sidecar_path(path).write_text(json.dumps(header, indent=2) + "\n", encoding="utf-8")


def load_stack(path: str | Path) -> HeatmapStack:
    path = Path(path)
    header = json.loads(_sidecar_path(path).read_text(encoding="utf-8"))
    shape = tuple(header["shape"])
    data = np.frombuffer(path.read_bytes(), dtype=header.get("dtype", "<f4"))
    if data.size != int(np.prod(shape)):
        raise ShapeMismatch("stack payload does not match its header shape")
    return HeatmapStack(data.reshape(shape).astype(np.float64), tuple(header["spacing"]))
