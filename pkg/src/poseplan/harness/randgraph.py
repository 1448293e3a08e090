"""Random single-input, single-sink graphs for property and oracle tests.

The generator grows a working chain, occasionally stashing a tensor to
rejoin later (diamonds), occasionally emitting a full coupling block, so
planner and executor tests see chains, branchy DAGs and reversible-eligible
structure in one distribution.
"""

from __future__ import annotations

import numpy as np

from ..graphcore import ComputationGraph, NodeSpec, OpKind


def random_graph(
    seed: int,
    n_nodes: int = 8,
    spatial: tuple[int, ...] = (6,),
    channel_choices: tuple[int, ...] = (2, 4),
    p_coupling: float = 0.35,
    elem_bytes: int = 8,
) -> ComputationGraph:
    rng = np.random.default_rng(seed)
    nodes: list[NodeSpec] = []
    nid = 0

    def emit(op, inputs, shape, split_half=0):
        nonlocal nid
        nodes.append(NodeSpec(nid, op, inputs, shape, elem_bytes, split_half))
        nid += 1
        return nid - 1

    ch = int(rng.choice(channel_choices))
    cur = emit(OpKind.INPUT, (), (ch,) + spatial)
    stash: int | None = None

    def remaining():
        return n_nodes - len(nodes)

    while remaining() > 0:
        cur_shape = nodes[cur].shape
        can_couple = cur_shape[0] % 2 == 0 and remaining() >= 6
        if can_couple and rng.random() < p_coupling:
            half = (cur_shape[0] // 2,) + cur_shape[1:]
            body = int(rng.integers(0, 2)) if remaining() >= 8 else 0
            lo = emit(OpKind.SPLIT, (cur,), half, split_half=0)
            hi = emit(OpKind.SPLIT, (cur,), half, split_half=1)
            f_end = hi
            for _ in range(body):
                f_end = emit(OpKind.AFFINE, (f_end,), half)
            y1 = emit(OpKind.ADD, (lo, f_end), half)
            g_end = y1
            for _ in range(body):
                g_end = emit(OpKind.AFFINE, (g_end,), half)
            y2 = emit(OpKind.ADD, (hi, g_end), half)
            cur = emit(OpKind.CONCAT, (y1, y2), cur_shape)
            continue
        roll = rng.random()
        if stash is not None and nodes[stash].shape == cur_shape and roll < 0.25:
            cur = emit(OpKind.ADD, (stash, cur), cur_shape)
            stash = None
        elif stash is None and roll < 0.35 and remaining() >= 3:
            stash = cur
            cur = emit(
                OpKind.AFFINE if rng.random() < 0.7 else OpKind.NONLINEARITY,
                (cur,),
                cur_shape,
            )
        elif roll < 0.75:
            new_ch = int(rng.choice(channel_choices))
            cur = emit(OpKind.AFFINE, (cur,), (new_ch,) + cur_shape[1:])
        else:
            cur = emit(OpKind.NONLINEARITY, (cur,), cur_shape)

    if stash is not None:
        # close the open branch so the graph has a single sink
        if nodes[stash].shape == nodes[cur].shape:
            cur = emit(OpKind.ADD, (stash, cur), nodes[cur].shape)
        else:
            proj = emit(OpKind.AFFINE, (stash,), nodes[cur].shape)
            cur = emit(OpKind.ADD, (proj, cur), nodes[cur].shape)
    return ComputationGraph(tuple(nodes))
