"""Event schedules for training a partitioned graph.

The cost model is an event simulation of one backward-after-forward pass:

* Forward: parts run in topological part order, nodes in topological order.
  An activation is a *keeper* when its producing part retains it (plain
  parts retain everything, checkpoint and reversible parts retain only
  their output node; graph inputs and the graph output are always kept) —
  unless it is the sole-consumed entry of a reversible part, which waives
  retention because the coupling block can rebuild it from its own output.
* Non-keepers free after their last forward read; keepers free after their
  last read anywhere (forward reads, backward recomputation reads, and the
  gradient steps of affine/nonlinearity consumers, which need the operand).
* Backward: parts run in reverse.  A checkpoint part first re-produces its
  discarded members from its still-live inputs; a reversible part
  reconstructs its members (and a waived entry) from the block output by
  inverting the coupling.  Gradient steps then run in reverse node order.
* A gradient tensor is activation-sized.  It is allocated at its first
  contribution and freed right after its own gradient step; gradients of
  graph inputs, like the graph output activation, are results and free at
  the very end.
* Parameters and optimizer state are excluded: they are identical for
  every plan of the same graph.

Both the peak-memory simulator and the differentiation engine walk the
same schedule, so their byte accounting agrees exactly by construction.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from functools import lru_cache

from ..errors import GraphValidationError, IneligibleReversible
from ..graphcore import ComputationGraph, OpKind, Subgraph, is_valid_partition
from .candidates import find_rev_candidates
from .plan import ExecMode, PartitionPlan, RevCandidate

ACT = "act"
GRAD = "grad"

PRODUCE = "produce"
RECOMPUTE = "recompute"
GRAD_STEP = "grad"
FREE = "free"

# Recompute semantics inside a reversible block.
HOW_OP = ("op",)


@dataclass(frozen=True)
class Event:
    kind: str
    node: int
    tensor: str = ACT
    how: tuple = HOW_OP
    allocs: tuple = ()  # ((tensor, node, bytes), ...) allocated by this event


@dataclass(frozen=True)
class Schedule:
    graph: ComputationGraph
    parts: tuple[Subgraph, ...]
    modes: tuple[ExecMode, ...]
    part_order: tuple[int, ...]
    events: tuple[Event, ...]
    waived: frozenset[int]
    keepers: frozenset[int]
    rev_info: dict[int, RevCandidate]
    forward_events: int  # events up to here cover the forward pass


@lru_cache(maxsize=4096)
def _partition_context(g: ComputationGraph, parts: tuple[Subgraph, ...]):
    """Mode-independent layout of a partition: membership, part order,
    per-part node order, and part outputs."""
    part_of = {}
    for idx, p in enumerate(parts):
        for nid in p.node_ids:
            part_of[nid] = idx
    succ: dict[int, set[int]] = {i: set() for i in range(len(parts))}
    indeg = {i: 0 for i in range(len(parts))}
    for n in g.nodes:
        for i in n.inputs:
            a, b = part_of[i], part_of[n.id]
            if a != b and b not in succ[a]:
                succ[a].add(b)
                indeg[b] += 1
    key = {i: min(g.label(nid) for nid in parts[i].node_ids) for i in range(len(parts))}
    ready = [(key[i], i) for i in indeg if indeg[i] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        _, i = heapq.heappop(ready)
        order.append(i)
        for j in sorted(succ[i]):
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(ready, (key[j], j))
    if len(order) != len(parts):
        raise GraphValidationError("partition induces a cyclic part graph")
    sorted_ids = tuple(tuple(p.sorted_ids(g)) for p in parts)
    v_o = tuple(ids[-1] for ids in sorted_ids)
    return tuple(order), part_of, v_o, sorted_ids


def _grad_reads_acts(op: OpKind) -> bool:
    return op in (OpKind.AFFINE, OpKind.NONLINEARITY)


def build_schedule(
    g: ComputationGraph,
    plan: PartitionPlan,
    *,
    forward_only: bool = False,
    validate: bool = True,
) -> Schedule:
    parts, modes = plan.parts, plan.modes
    if validate and not is_valid_partition(g, list(parts)):
        raise GraphValidationError("plan partition is not a valid partition of the graph")

    rev_info: dict[int, RevCandidate] = {}
    if any(m is ExecMode.REVERSIBLE for m in modes):
        by_members = {c.part.node_ids: c for c in find_rev_candidates(g)}
        for idx, (p, m) in enumerate(zip(parts, modes)):
            if m is ExecMode.REVERSIBLE:
                cand = by_members.get(p.node_ids)
                if cand is None:
                    raise IneligibleReversible(
                        f"part {sorted(p.node_ids)} is not an additive-coupling block"
                    )
                rev_info[idx] = cand

    order, part_of, v_o, sorted_ids = _partition_context(g, parts)
    output_id = g.output_id

    waived = set()
    for idx, cand in rev_info.items():
        if all(c in parts[idx].node_ids for c in g.consumers(cand.entry)):
            waived.add(cand.entry)

    input_op_ids = frozenset(g.input_ids)

    def base_retained(nid: int) -> bool:
        if nid == output_id or nid in input_op_ids:
            return True
        idx = part_of[nid]
        if modes[idx] is ExecMode.PLAIN:
            return True
        return nid == v_o[idx]

    keepers = frozenset(
        nid for nid in g.node_ids if base_retained(nid) and nid not in waived
    )

    # --- skeleton: (kind, node, how) ------------------------------------
    skeleton: list[tuple[str, int, tuple]] = []
    for idx in order:
        for nid in sorted_ids[idx]:
            skeleton.append((PRODUCE, nid, HOW_OP))
    n_forward = len(skeleton)

    if not forward_only:
        for idx in reversed(order):
            mode = modes[idx]
            members = sorted_ids[idx]
            if mode is ExecMode.CHECKPOINT:
                for nid in members:
                    if not base_retained(nid):
                        skeleton.append((RECOMPUTE, nid, HOW_OP))
            elif mode is ExecMode.REVERSIBLE:
                c = rev_info[idx]
                skeleton.append((RECOMPUTE, c.y1, ("slice_lo", c.out)))
                skeleton.append((RECOMPUTE, c.y2, ("slice_hi", c.out)))
                for nid in c.g_chain:
                    skeleton.append((RECOMPUTE, nid, HOW_OP))
                g_end = c.g_chain[-1] if c.g_chain else c.y1
                skeleton.append((RECOMPUTE, c.split_hi, ("sub", c.y2, g_end)))
                for nid in c.f_chain:
                    skeleton.append((RECOMPUTE, nid, HOW_OP))
                f_end = c.f_chain[-1] if c.f_chain else c.split_hi
                skeleton.append((RECOMPUTE, c.split_lo, ("sub", c.y1, f_end)))
                if c.entry in waived:
                    skeleton.append((RECOMPUTE, c.entry, ("cat2", c.split_lo, c.split_hi)))
            for nid in reversed(members):
                skeleton.append((GRAD_STEP, nid, HOW_OP))

    # --- liveness: last read per tensor instance ------------------------
    act_open: dict[int, list] = {}  # node -> [start_idx, last_use_idx]
    act_done: list[tuple[int, int]] = []  # closed, non-final instances: (node, last_use)
    grad_open: dict[int, list] = {}
    event_allocs: list[list[tuple[str, int, int]]] = []

    def read_act(nid: int, i: int) -> None:
        inst = act_open.get(nid)
        if inst is None:
            raise AssertionError(f"schedule bug: act {nid} read while dead at event {i}")
        inst[1] = i

    grad_reads = frozenset(
        n.id for n in g.nodes if n.op in (OpKind.AFFINE, OpKind.NONLINEARITY)
    )
    inputs_of = {n.id: n.inputs for n in g.nodes}
    for i, (kind, nid, how) in enumerate(skeleton):
        allocs: list[tuple[str, int, int]] = []
        if kind == PRODUCE or kind == RECOMPUTE:
            if how == HOW_OP:
                for src in inputs_of[nid]:
                    read_act(src, i)
            else:  # slice_lo / slice_hi / sub / cat2
                for src in how[1:]:
                    read_act(src, i)
            prev = act_open.pop(nid, None)
            if prev is not None:
                if prev[1] >= i:
                    raise AssertionError(f"schedule bug: act {nid} re-produced while in use")
                act_done.append((nid, prev[1]))
            act_open[nid] = [i, i]
            allocs.append((ACT, nid, g.size_bytes(nid)))
        else:  # GRAD_STEP
            if nid == output_id:
                grad_open[nid] = [i, i]
                allocs.append((GRAD, nid, g.size_bytes(nid)))
            ginst = grad_open.get(nid)
            if ginst is None:
                raise AssertionError(f"schedule bug: grad {nid} stepped before any contribution")
            ginst[1] = i
            if nid in grad_reads:
                for src in inputs_of[nid]:
                    read_act(src, i)
            for src in inputs_of[nid]:
                if src in grad_open:
                    grad_open[src][1] = i
                else:
                    grad_open[src] = [i, i]
                    allocs.append((GRAD, src, g.size_bytes(src)))
        event_allocs.append(allocs)

    # --- frees ----------------------------------------------------------
    end = len(skeleton)
    frees_after: dict[int, list[tuple[str, int]]] = {}
    end_frees: list[tuple[str, int]] = []

    def add_free(after: int, tensor: str, nid: int) -> None:
        if after >= end:
            end_frees.append((tensor, nid))
        else:
            frees_after.setdefault(after, []).append((tensor, nid))

    input_ids = set(g.input_ids)
    for nid, last in act_done:
        add_free(last, ACT, nid)
    for nid, (start, last) in sorted(act_open.items()):
        if nid == output_id:
            add_free(end, ACT, nid)  # result
        elif forward_only and nid in keepers:
            add_free(end, ACT, nid)  # would be held for a backward pass
        else:
            add_free(last, ACT, nid)
    for nid, (start, last) in sorted(grad_open.items()):
        if nid in input_ids:
            add_free(end, GRAD, nid)  # result
        else:
            add_free(last, GRAD, nid)

    events: list[Event] = []
    forward_events = 0
    for i, (kind, nid, how) in enumerate(skeleton):
        events.append(Event(kind, nid, ACT if kind != GRAD_STEP else GRAD, how,
                            tuple(event_allocs[i])))
        for tensor, fid in sorted(frees_after.get(i, [])):
            events.append(Event(FREE, fid, tensor))
        if i == n_forward - 1:
            forward_events = len(events)
    for tensor, fid in sorted(end_frees):
        events.append(Event(FREE, fid, tensor))
    if forward_only:
        forward_events = len(events)

    return Schedule(
        graph=g,
        parts=parts,
        modes=modes,
        part_order=tuple(order),
        events=tuple(events),
        waived=frozenset(waived),
        keepers=keepers,
        rev_info=rev_info,
        forward_events=forward_events,
    )
