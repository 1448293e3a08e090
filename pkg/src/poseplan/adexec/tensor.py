"""Dense 64-bit tensors and parameter stores for the execution engine."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch
from ..graphcore import ComputationGraph, OpKind

TensorValue = np.ndarray  # dense float64, validated at API boundaries


def as_tensor(value, shape: tuple[int, ...] | None = None) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if shape is not None and tuple(arr.shape) != tuple(shape):
        raise ShapeMismatch(f"expected shape {tuple(shape)}, got {tuple(arr.shape)}")
    if not np.all(np.isfinite(arr)):
        raise ShapeMismatch("tensor values must be finite")
    return arr


def init_params(g: ComputationGraph, seed: int) -> dict[int, dict[str, np.ndarray]]:
    """Per-affine-node weights and biases, reproducible from ``seed``.

    Weights are scaled like 1/sqrt(fan_in) and biased slightly positive so
    nonlinearity inputs rarely sit on the kink, which keeps finite-difference
    checks clean.
    """
    rng = np.random.default_rng(seed)
    params: dict[int, dict[str, np.ndarray]] = {}
    for node in g.nodes:
        if node.op is OpKind.AFFINE:
            c_in = g.node(node.inputs[0]).channels
            c_out = node.channels
            params[node.id] = {
                "w": rng.normal(0.0, 1.0 / np.sqrt(c_in), size=(c_out, c_in)),
                "b": 0.1 * rng.normal(0.0, 1.0, size=(c_out,)) + 0.05,
            }
    return params


def zero_like_params(params: dict[int, dict[str, np.ndarray]]):
    return {nid: {k: np.zeros_like(v) for k, v in kv.items()} for nid, kv in params.items()}


def flatten_params(params: dict[int, dict[str, np.ndarray]]) -> np.ndarray:
    chunks = []
    for nid in sorted(params):
        chunks.append(params[nid]["w"].ravel())
        chunks.append(params[nid]["b"].ravel())
    return np.concatenate(chunks) if chunks else np.zeros(0)


def unflatten_params(flat: np.ndarray, template: dict[int, dict[str, np.ndarray]]):
    out: dict[int, dict[str, np.ndarray]] = {}
    pos = 0
    for nid in sorted(template):
        w, b = template[nid]["w"], template[nid]["b"]
        out[nid] = {
            "w": flat[pos : pos + w.size].reshape(w.shape).copy(),
            "b": flat[pos + w.size : pos + w.size + b.size].reshape(b.shape).copy(),
        }
        pos += w.size + b.size
    return out


def validate_params(g: ComputationGraph, params) -> None:
    for node in g.nodes:
        if node.op is OpKind.AFFINE:
            if node.id not in params:
                raise ShapeMismatch(f"missing parameters for affine node {node.id}")
            c_in = g.node(node.inputs[0]).channels
            w, b = params[node.id]["w"], params[node.id]["b"]
            if w.shape != (node.channels, c_in) or b.shape != (node.channels,):
                raise ShapeMismatch(f"bad parameter shapes for affine node {node.id}")
