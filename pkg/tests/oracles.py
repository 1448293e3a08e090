"""Independent oracles used by the test suite.

These stay deliberately dumb: exhaustive enumeration and direct arithmetic,
no shortcuts shared with the implementations they check.
"""

from __future__ import annotations

import itertools

import numpy as np

from poseplan.graphcore import ComputationGraph, Subgraph, is_valid_partition
from poseplan.memplanner import (
    ExecMode,
    find_rev_candidates,
    normalize_plan,
    simulate_peak_memory,
)


def restricted_growth_strings(n: int):
    """Every set-partition assignment vector of n items."""
    a = [0] * n
    while True:
        yield list(a)
        i = n - 1
        while i > 0:
            if a[i] < max(a[:i]) + 1:
                a[i] += 1
                for j in range(i + 1, n):
                    a[j] = 0
                break
            a[i] = 0
            i -= 1
        else:
            return


def brute_force_min_peak(g: ComputationGraph) -> int:
    """Minimum simulated peak over all valid partitions and eligible modes."""
    ids = list(g.node_ids)
    cand_sets = {c.part.node_ids for c in find_rev_candidates(g)}
    best = None
    for assign in restricted_growth_strings(len(ids)):
        groups: dict[int, set[int]] = {}
        for nid, gi in zip(ids, assign):
            groups.setdefault(gi, set()).add(nid)
        parts = [Subgraph(frozenset(s)) for s in groups.values()]
        if not is_valid_partition(g, parts):
            continue
        options = []
        for p in parts:
            opts = [ExecMode.PLAIN, ExecMode.CHECKPOINT]
            if p.node_ids in cand_sets:
                opts.append(ExecMode.REVERSIBLE)
            options.append(opts)
        for modes in itertools.product(*options):
            peak = simulate_peak_memory(g, normalize_plan(g, parts, modes))
            if best is None or peak < best:
                best = peak
    return best


def central_difference(f, x: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar function over a flat array."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros(x.size)
    flat = x.ravel()
    for i in range(flat.size):
        up, dn = flat.copy(), flat.copy()
        up[i] += step
        dn[i] -= step
        grad[i] = (f(up.reshape(x.shape)) - f(dn.reshape(x.shape))) / (2 * step)
    return grad.reshape(x.shape)


def fd_agrees(analytic: np.ndarray, fd: np.ndarray, rtol: float = 1e-4) -> bool:
    """Per-element relative agreement with a floor tied to the gradient scale."""
    analytic = np.asarray(analytic)
    fd = np.asarray(fd)
    scale = max(np.max(np.abs(analytic)), np.max(np.abs(fd)), 1e-12)
    denom = np.maximum(np.abs(fd), 1e-3 * scale)
    return bool(np.max(np.abs(analytic - fd) / denom) <= rtol)
