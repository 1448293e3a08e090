"""Forward kernels and vector-Jacobian products for the graph op set.

All kernels work on float64 arrays shaped (channels, *spatial) with one to
three spatial axes.  The nonlinearity is a leaky rectifier with slope 0.01,
so it is invertible and smooth almost everywhere.
"""

from __future__ import annotations

import numpy as np

from ..graphcore import NodeSpec, OpKind

LEAKY_SLOPE = 0.01


def _bias_view(b: np.ndarray, spatial_rank: int) -> np.ndarray:
    return b.reshape((-1,) + (1,) * spatial_rank)


def op_forward(node: NodeSpec, inputs: list[np.ndarray], params) -> np.ndarray:
    op = node.op
    if op is OpKind.AFFINE:
        x = inputs[0]
        p = params[node.id]
        y = np.tensordot(p["w"], x, axes=([1], [0]))
        return y + _bias_view(p["b"], x.ndim - 1)
    if op is OpKind.NONLINEARITY:
        x = inputs[0]
        return np.where(x > 0, x, LEAKY_SLOPE * x)
    if op is OpKind.ADD:
        return inputs[0] + inputs[1]
    if op is OpKind.SPLIT:
        x = inputs[0]
        half = x.shape[0] // 2
        return x[:half].copy() if node.split_half == 0 else x[half:].copy()
    if op is OpKind.CONCAT:
        return np.concatenate(inputs, axis=0)
    if op is OpKind.DOWNSAMPLE:
        x = inputs[0]
        for ax in range(1, x.ndim):
            n = x.shape[ax]
            ev = x.take(range(0, n, 2), axis=ax)
            od = x.take(range(1, n, 2), axis=ax)
            x = 0.5 * (ev + od)
        return x
    if op is OpKind.UPSAMPLE:
        x = inputs[0]
        for ax in range(1, x.ndim):
            x = np.repeat(x, 2, axis=ax)
        return x
    if op is OpKind.OUTPUT:
        return inputs[0].copy()
    raise AssertionError(f"op {op} has no forward kernel")


def needs_input_acts(op: OpKind) -> bool:
    """Ops whose backward reads the operand value (must stay live)."""
    return op in (OpKind.AFFINE, OpKind.NONLINEARITY)


def op_vjp(node: NodeSpec, inputs, grad_out: np.ndarray, params, in_channels=None):
    """Gradients w.r.t. each input, plus parameter gradients for affine nodes.

    ``inputs`` carries operand values only for ops where
    ``needs_input_acts`` holds; the rest derive everything from shapes
    (``in_channels`` gives operand channel counts for concat).
    """
    op = node.op
    if op is OpKind.AFFINE:
        x = inputs[0]
        p = params[node.id]
        dx = np.tensordot(p["w"].T, grad_out, axes=([1], [0]))
        gy = grad_out.reshape(grad_out.shape[0], -1)
        xf = x.reshape(x.shape[0], -1)
        dparams = {"w": gy @ xf.T, "b": gy.sum(axis=1)}
        return [dx], dparams
    if op is OpKind.NONLINEARITY:
        x = inputs[0]
        return [grad_out * np.where(x > 0, 1.0, LEAKY_SLOPE)], None
    if op is OpKind.ADD:
        return [grad_out, grad_out], None
    if op is OpKind.SPLIT:
        src_shape = (grad_out.shape[0] * 2,) + grad_out.shape[1:]
        dx = np.zeros(src_shape)
        half = grad_out.shape[0]
        if node.split_half == 0:
            dx[:half] = grad_out
        else:
            dx[half:] = grad_out
        return [dx], None
    if op is OpKind.CONCAT:
        grads = []
        lo = 0
        for c in in_channels:
            grads.append(grad_out[lo : lo + c].copy())
            lo += c
        return grads, None
    if op is OpKind.DOWNSAMPLE:
        dy = grad_out
        for ax in range(1, dy.ndim):
            dy = 0.5 * np.repeat(dy, 2, axis=ax)
        return [dy], None
    if op is OpKind.UPSAMPLE:
        dy = grad_out
        for ax in range(1, dy.ndim):
            n = dy.shape[ax]
            ev = dy.take(range(0, n, 2), axis=ax)
            od = dy.take(range(1, n, 2), axis=ax)
            dy = ev + od
        return [dy], None
    if op is OpKind.OUTPUT:
        return [grad_out], None
    raise AssertionError(f"op {op} has no vjp")
