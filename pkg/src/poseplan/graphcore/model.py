"""Computation graphs of tensor-producing nodes.

A graph is a DAG in which every node produces exactly one dense tensor.
Edges are derived from each node's ``inputs`` list.  All values here are
immutable after construction and safe to share across threads; every
operation in this module is a pure function.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum

from ..errors import CycleDetected, GraphValidationError, UnknownNode


class OpKind(str, Enum):
    INPUT = "input"
    AFFINE = "affine"
    NONLINEARITY = "nonlinearity"
    ADD = "add"
    SPLIT = "split"
    CONCAT = "concat"
    DOWNSAMPLE = "downsample"
    UPSAMPLE = "upsample"
    OUTPUT = "output"


@dataclass(frozen=True)
class NodeSpec:
    """One tensor-producing operation.

    ``shape`` is the produced tensor's extents, leading extent being the
    channel dimension.  ``split_half`` selects which channel half a split
    node yields (0 = low channels, 1 = high channels) and is ignored for
    every other op kind.
    """

    id: int
    op: OpKind
    inputs: tuple[int, ...]
    shape: tuple[int, ...]
    elem_bytes: int = 4
    split_half: int = 0

    def __post_init__(self):
        object.__setattr__(self, "op", OpKind(self.op))
        object.__setattr__(self, "inputs", tuple(int(i) for i in self.inputs))
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        if not self.shape or any(s < 1 for s in self.shape):
            raise GraphValidationError(f"node {self.id}: shape extents must be >= 1")
        if self.elem_bytes < 1:
            raise GraphValidationError(f"node {self.id}: elem_bytes must be positive")
        if self.op is OpKind.SPLIT and self.split_half not in (0, 1):
            raise GraphValidationError(f"node {self.id}: split_half must be 0 or 1")

    @property
    def channels(self) -> int:
        return self.shape[0]

    @property
    def spatial(self) -> tuple[int, ...]:
        return self.shape[1:]

    def size_bytes(self) -> int:
        return math.prod(self.shape) * self.elem_bytes


_ARITY = {
    OpKind.INPUT: 0,
    OpKind.AFFINE: 1,
    OpKind.NONLINEARITY: 1,
    OpKind.ADD: 2,
    OpKind.SPLIT: 1,
    OpKind.DOWNSAMPLE: 1,
    OpKind.UPSAMPLE: 1,
    OpKind.OUTPUT: 1,
}


def _check_node_shapes(node: NodeSpec, ins: list[NodeSpec]) -> None:
    op = node.op
    if op in _ARITY and len(ins) != _ARITY[op]:
        raise GraphValidationError(
            f"node {node.id}: {op.value} takes {_ARITY[op]} input(s), got {len(ins)}"
        )
    if op is OpKind.CONCAT and len(ins) < 2:
        raise GraphValidationError(f"node {node.id}: concat takes at least 2 inputs")

    if op in (OpKind.NONLINEARITY, OpKind.OUTPUT):
        if node.shape != ins[0].shape:
            raise GraphValidationError(f"node {node.id}: shape must equal input shape")
    elif op is OpKind.AFFINE:
        if node.spatial != ins[0].spatial:
            raise GraphValidationError(f"node {node.id}: affine preserves spatial extents")
    elif op is OpKind.ADD:
        if ins[0].shape != ins[1].shape or node.shape != ins[0].shape:
            raise GraphValidationError(f"node {node.id}: add operands must share one shape")
    elif op is OpKind.SPLIT:
        src = ins[0]
        if src.channels % 2 != 0:
            raise GraphValidationError(
                f"node {node.id}: split requires an even leading channel extent"
            )
        if node.shape != (src.channels // 2,) + src.spatial:
            raise GraphValidationError(f"node {node.id}: split yields half the channels")
    elif op is OpKind.CONCAT:
        spatial = ins[0].spatial
        if any(i.spatial != spatial for i in ins):
            raise GraphValidationError(
                f"node {node.id}: concat operands must agree except leading channels"
            )
        if node.shape != (sum(i.channels for i in ins),) + spatial:
            raise GraphValidationError(f"node {node.id}: concat sums leading channels")
    elif op is OpKind.DOWNSAMPLE:
        src = ins[0]
        if any(s % 2 != 0 for s in src.spatial):
            raise GraphValidationError(
                f"node {node.id}: downsample needs even spatial extents"
            )
        if node.shape != (src.channels,) + tuple(s // 2 for s in src.spatial):
            raise GraphValidationError(f"node {node.id}: downsample halves spatial extents")
    elif op is OpKind.UPSAMPLE:
        src = ins[0]
        if node.shape != (src.channels,) + tuple(s * 2 for s in src.spatial):
            raise GraphValidationError(f"node {node.id}: upsample doubles spatial extents")


@dataclass(frozen=True)
class ComputationGraph:
    """An immutable DAG with exactly one designated output (sink) node."""

    nodes: tuple[NodeSpec, ...]
    _by_id: dict[int, NodeSpec] = field(init=False, repr=False, compare=False)
    _topo: tuple[int, ...] = field(init=False, repr=False, compare=False)
    _label: dict[int, int] = field(init=False, repr=False, compare=False)
    _consumers: dict[int, tuple[int, ...]] = field(init=False, repr=False, compare=False)
    _sizes: dict[int, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        by_id: dict[int, NodeSpec] = {}
        for n in self.nodes:
            if n.id in by_id:
                raise GraphValidationError(f"duplicate node id {n.id}")
            by_id[n.id] = n
        for n in self.nodes:
            for i in n.inputs:
                if i == n.id:
                    raise GraphValidationError(f"node {n.id} references itself")
                if i not in by_id:
                    raise UnknownNode(f"node {n.id} references unknown id {i}")
            _check_node_shapes(n, [by_id[i] for i in n.inputs])
        object.__setattr__(self, "_by_id", by_id)

        topo = _kahn_order(by_id)
        object.__setattr__(self, "_topo", tuple(topo))
        object.__setattr__(self, "_label", {nid: i for i, nid in enumerate(topo)})

        consumers: dict[int, list[int]] = {n.id: [] for n in self.nodes}
        for n in self.nodes:
            for i in n.inputs:
                consumers[i].append(n.id)
        object.__setattr__(
            self, "_consumers", {k: tuple(sorted(v)) for k, v in consumers.items()}
        )
        object.__setattr__(self, "_sizes", {n.id: n.size_bytes() for n in self.nodes})

        sinks = [n.id for n in self.nodes if not consumers[n.id]]
        if len(sinks) != 1:
            raise GraphValidationError(
                f"graph must have exactly one designated output node, found sinks {sinks}"
            )
        explicit = [n for n in self.nodes if n.op is OpKind.OUTPUT]
        if len(explicit) > 1 or (explicit and explicit[0].id != sinks[0]):
            raise GraphValidationError("an explicit output node must be the unique sink")

        reachable = set()
        frontier = [n.id for n in self.nodes if n.op is OpKind.INPUT]
        reachable.update(frontier)
        while frontier:
            nxt = []
            for nid in frontier:
                for c in consumers[nid]:
                    if c not in reachable:
                        reachable.add(c)
                        nxt.append(c)
            frontier = nxt
        unreachable = [n.id for n in self.nodes if n.op is not OpKind.INPUT and n.id not in reachable]
        if unreachable:
            raise GraphValidationError(f"nodes {unreachable} unreachable from any input")

    def node(self, nid: int) -> NodeSpec:
        try:
            return self._by_id[nid]
        except KeyError:
            raise UnknownNode(f"no node with id {nid}") from None

    def __contains__(self, nid: int) -> bool:
        return nid in self._by_id

    @property
    def node_ids(self) -> tuple[int, ...]:
        return self._topo

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        out = []
        for n in self.nodes:
            for i in n.inputs:
                out.append((i, n.id))
        return tuple(sorted(out))

    @property
    def output_id(self) -> int:
        return self._topo[-1]

    @property
    def input_ids(self) -> tuple[int, ...]:
        return tuple(n.id for n in self.nodes if n.op is OpKind.INPUT)

    def label(self, nid: int) -> int:
        if nid not in self._label:
            raise UnknownNode(f"no node with id {nid}")
        return self._label[nid]

    def consumers(self, nid: int) -> tuple[int, ...]:
        if nid not in self._consumers:
            raise UnknownNode(f"no node with id {nid}")
        return self._consumers[nid]

    def size_bytes(self, nid: int) -> int:
        try:
            return self._sizes[nid]
        except KeyError:
            raise UnknownNode(f"no node with id {nid}") from None


def _kahn_order(by_id: dict[int, NodeSpec]) -> list[int]:
    # Deterministic Kahn's algorithm; ready nodes drain by ascending id.
    indeg = {nid: len(n.inputs) for nid, n in by_id.items()}
    consumers: dict[int, list[int]] = {nid: [] for nid in by_id}
    for n in by_id.values():
        for i in n.inputs:
            consumers[i].append(n.id)
    ready = [nid for nid, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    order: list[int] = []
    while ready:
        nid = heapq.heappop(ready)
        order.append(nid)
        for c in consumers[nid]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(ready, c)
    if len(order) != len(by_id):
        raise CycleDetected("graph contains a cycle")
    return order


def topological_order(g: ComputationGraph) -> list[int]:
    """Node ids, each after all of its inputs; ties break by ascending id."""
    return list(g.node_ids)


@dataclass(frozen=True)
class Subgraph:
    """A set of node ids; its output node is the member with the largest
    topological label."""

    node_ids: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "node_ids", frozenset(int(i) for i in self.node_ids))
        if not self.node_ids:
            raise GraphValidationError("subgraph must be nonempty")

    def output_node(self, g: ComputationGraph) -> int:
        return max(self.node_ids, key=g.label)

    def sorted_ids(self, g: ComputationGraph) -> list[int]:
        return sorted(self.node_ids, key=g.label)


def is_valid_subgraph(g: ComputationGraph, s: Subgraph) -> bool:
    """True iff no edge leaves ``s`` except from its output node."""
    for nid in s.node_ids:
        if nid not in g:
            raise UnknownNode(f"subgraph references unknown id {nid}")
    out = s.output_node(g)
    for nid in s.node_ids:
        if nid == out:
            continue
        for c in g.consumers(nid):
            if c not in s.node_ids:
                return False
    return True


def is_valid_partition(g: ComputationGraph, parts: list[Subgraph]) -> bool:
    """True iff ``parts`` are disjoint, cover the graph, and are each valid."""
    seen: set[int] = set()
    total = 0
    for p in parts:
        total += len(p.node_ids)
        seen |= p.node_ids
    if total != len(seen) or seen != set(g.node_ids):
        return False
    return all(is_valid_subgraph(g, p) for p in parts)
