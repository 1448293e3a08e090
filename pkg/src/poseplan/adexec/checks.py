"""Gradient-exactness and trace/model agreement checks.

``check_gradients`` executes one graph under several plans and verifies
that outputs and gradients do not depend on the plan, that every trace's
peak matches the simulated peak, and that analytic gradients agree with
central finite differences of the scalar <output, loss_grad>.
"""

from __future__ import annotations

import numpy as np

from ..graphcore import ComputationGraph
from ..memplanner import (
    all_plain_plan,
    plan,
    plan_checkpoints,
    plan_reversible_only,
    simulate_peak_memory,
)
from .engine import backward, execute
from .tensor import flatten_params, init_params, unflatten_params

FD_STEP = 1e-5


def rel_dev(a: np.ndarray, b: np.ndarray, floor_scale: float = 1e-6) -> float:
    """Max per-element relative deviation with an absolute floor tied to b's scale."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    floor = max(float(np.max(np.abs(b), initial=0.0)) * floor_scale, 1e-12)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), floor), initial=0.0))


def _grad_vector(res) -> np.ndarray:
    chunks = [res.input_grad.ravel()]
    for nid in sorted(res.param_grads):
        chunks.append(res.param_grads[nid]["w"].ravel())
        chunks.append(res.param_grads[nid]["b"].ravel())
    return np.concatenate(chunks)


def finite_difference_grads(g, params, x, loss_grad, plan_, step: float = FD_STEP):
    """Central differences of L(params, x) = <output, loss_grad>."""

    def loss_at(p, xv):
        res = execute(g, p, xv, plan_, loss_grad=None)
        return float(np.sum(res.output * loss_grad))

    flat = flatten_params(params)
    fd_param = np.zeros_like(flat)
    for i in range(flat.size):
        up, dn = flat.copy(), flat.copy()
        up[i] += step
        dn[i] -= step
        fd_param[i] = (loss_at(unflatten_params(up, params), x)
                       - loss_at(unflatten_params(dn, params), x)) / (2 * step)
    fd_input = np.zeros(x.size)
    xflat = x.ravel()
    for i in range(x.size):
        up, dn = xflat.copy(), xflat.copy()
        up[i] += step
        dn[i] -= step
        fd_input[i] = (loss_at(params, up.reshape(x.shape))
                       - loss_at(params, dn.reshape(x.shape))) / (2 * step)
    return fd_input, fd_param


def standard_plans(g: ComputationGraph) -> dict:
    return {
        "all_plain": all_plain_plan(g),
        "checkpoint_only": plan_checkpoints(g),
        "reversible_only": plan_reversible_only(g),
        "planned": plan(g),
    }


def check_gradients(
    g: ComputationGraph,
    seed: int,
    plans: dict | None = None,
    run_fd: bool = True,
) -> dict:
    rng = np.random.default_rng(seed)
    params = init_params(g, seed)
    x = rng.normal(0.0, 1.0, size=g.node(g.input_ids[0]).shape)
    loss_grad = rng.normal(0.0, 1.0, size=g.node(g.output_id).shape)

    plans = plans or standard_plans(g)
    ref = backward(g, params, x, plans["all_plain"], loss_grad)
    ref_grads = _grad_vector(ref)

    rows = []
    for name, pl in plans.items():
        res = backward(g, params, x, pl, loss_grad)
        sim_peak = simulate_peak_memory(g, pl)
        rows.append(
            {
                "plan": name,
                "peak_bytes": res.trace.peak_bytes,
                "sim_peak_bytes": sim_peak,
                "trace_matches_sim": res.trace.peak_bytes == sim_peak,
                "max_output_abs_dev": float(np.max(np.abs(res.output - ref.output), initial=0.0)),
                "max_grad_rel_dev": rel_dev(_grad_vector(res), ref_grads),
            }
        )

    report = {"plans": rows}
    if run_fd:
        fd_input, fd_param = finite_difference_grads(g, params, x, loss_grad, plans["all_plain"])
        fd_vec = np.concatenate([fd_input, fd_param])
        report["fd_max_rel_dev"] = rel_dev(ref_grads, fd_vec, floor_scale=1e-3)
    report["ok"] = all(
        r["trace_matches_sim"]
        and r["max_output_abs_dev"] <= 1e-12
        and r["max_grad_rel_dev"] <= 1e-9
        for r in rows
    ) and (report.get("fd_max_rel_dev", 0.0) <= 1e-4)
    return report
