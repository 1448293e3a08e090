"""Detection of reversible-eligible coupling blocks.

A candidate must be an exact additive-coupling subgraph: two channel halves,
two unary body chains F and G, two adds and a final concat, with no interior
activation visible outside the block.  Only such blocks can be executed
without retaining their input, because the coupling makes the entry tensor
recoverable from the block output by subtraction.
"""

from __future__ import annotations

from functools import lru_cache

from ..graphcore import ComputationGraph, OpKind, Subgraph
from .plan import RevCandidate

_UNARY_BODY_OPS = (OpKind.AFFINE, OpKind.NONLINEARITY)


def _walk_chain_back(g: ComputationGraph, tail: int, stop: int, half_shape) -> list[int] | None:
    """Collect a unary chain ending at ``tail`` whose head consumes ``stop``.

    Returns node ids in forward order, or None when the walk hits anything
    that is not a single-consumer shape-preserving unary op.
    """
    chain: list[int] = []
    cur = tail
    while cur != stop:
        node = g.node(cur)
        if node.op not in _UNARY_BODY_OPS or node.shape != half_shape:
            return None
        if len(g.consumers(cur)) != 1:
            return None
        chain.append(cur)
        cur = node.inputs[0]
        if len(chain) > len(g.nodes):
            return None
    chain.reverse()
    return chain


def _match_block(g: ComputationGraph, concat_id: int) -> RevCandidate | None:
    concat = g.node(concat_id)
    if concat.op is not OpKind.CONCAT or len(concat.inputs) != 2:
        return None
    y1_id, y2_id = concat.inputs
    y1, y2 = g.node(y1_id), g.node(y2_id)
    if y1.op is not OpKind.ADD or y2.op is not OpKind.ADD:
        return None
    half_shape = y1.shape

    split_lo = next(
        (
            i
            for i in sorted(y1.inputs)
            if g.node(i).op is OpKind.SPLIT and g.node(i).split_half == 0
        ),
        None,
    )
    if split_lo is None:
        return None
    f_end = y1.inputs[1] if y1.inputs[0] == split_lo else y1.inputs[0]

    split_hi = next(
        (
            i
            for i in sorted(y2.inputs)
            if g.node(i).op is OpKind.SPLIT and g.node(i).split_half == 1
        ),
        None,
    )
    if split_hi is None:
        return None
    g_end = y2.inputs[1] if y2.inputs[0] == split_hi else y2.inputs[0]

    if g.node(split_lo).inputs != g.node(split_hi).inputs:
        return None
    entry = g.node(split_lo).inputs[0]
    if g.node(entry).shape != concat.shape or g.node(split_lo).shape != half_shape:
        return None

    f_chain = [] if f_end == split_hi else _walk_chain_back(g, f_end, split_hi, half_shape)
    if f_chain is None:
        return None
    g_chain = [] if g_end == y1_id else _walk_chain_back(g, g_end, y1_id, half_shape)
    if g_chain is None:
        return None

    # Interior activations must stay interior, otherwise discarding them
    # during the forward pass would starve an outside consumer.
    f_head = f_chain[0] if f_chain else y1_id
    g_head = g_chain[0] if g_chain else y2_id
    if g.consumers(split_lo) != (y1_id,):
        return None
    if set(g.consumers(split_hi)) != {f_head, y2_id} or len(g.consumers(split_hi)) != 2:
        return None
    if set(g.consumers(y1_id)) != {g_head, concat_id} or len(g.consumers(y1_id)) != 2:
        return None
    if g.consumers(y2_id) != (concat_id,):
        return None

    members = frozenset(
        {split_lo, split_hi, y1_id, y2_id, concat_id} | set(f_chain) | set(g_chain)
    )
    if len(members) != 5 + len(f_chain) + len(g_chain) or entry in members:
        return None
    return RevCandidate(
        part=Subgraph(members),
        split_channels=g.node(entry).channels,
        entry=entry,
        split_lo=split_lo,
        split_hi=split_hi,
        y1=y1_id,
        y2=y2_id,
        out=concat_id,
        f_chain=tuple(f_chain),
        g_chain=tuple(g_chain),
    )


@lru_cache(maxsize=128)
def _find_rev_candidates_cached(g: ComputationGraph) -> tuple[RevCandidate, ...]:
    found = []
    for nid in g.node_ids:
        cand = _match_block(g, nid)
        if cand is not None:
            found.append(cand)
    found.sort(key=lambda c: min(g.label(i) for i in c.part.node_ids))
    return tuple(found)


def find_rev_candidates(g: ComputationGraph) -> list[RevCandidate]:
    """All coupling blocks in ``g``, ascending by minimum topological label.

    Candidates are pairwise node-disjoint because every interior node of a
    block has a single consumer inside the same block.
    """
    return list(_find_rev_candidates_cached(g))
