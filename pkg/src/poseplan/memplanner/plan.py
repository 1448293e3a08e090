"""Partition plans: execution-mode assignments over valid graph partitions."""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum

from ..graphcore import ComputationGraph, Subgraph


class ExecMode(IntEnum):
    PLAIN = 1
    CHECKPOINT = 2
    REVERSIBLE = 3


@dataclass(frozen=True)
class PartitionPlan:
    """A valid partition plus one execution mode per part.

    ``peak_bytes`` is the simulated peak of this exact plan; it is ``None``
    until a planner or the simulator fills it in.
    """

    parts: tuple[Subgraph, ...]
    modes: tuple[ExecMode, ...]
    peak_bytes: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        object.__setattr__(self, "modes", tuple(ExecMode(m) for m in self.modes))
        if len(self.parts) != len(self.modes):
            raise ValueError("one mode per part required")

    def with_peak(self, peak: int) -> "PartitionPlan":
        return replace(self, peak_bytes=int(peak))

    def canonical_key(self) -> tuple:
        return tuple(
            sorted((tuple(sorted(p.node_ids)), int(m)) for p, m in zip(self.parts, self.modes))
        )


def normalize_plan(g: ComputationGraph, parts, modes, peak=None) -> PartitionPlan:
    """Order parts by minimum topological label so equal plans serialize equally."""
    pairs = sorted(zip(parts, modes), key=lambda pm: min(g.label(i) for i in pm[0].node_ids))
    return PartitionPlan(
        parts=tuple(p for p, _ in pairs),
        modes=tuple(m for _, m in pairs),
        peak_bytes=peak,
    )


def all_plain_plan(g: ComputationGraph) -> PartitionPlan:
    parts = tuple(Subgraph(frozenset({nid})) for nid in g.node_ids)
    return PartitionPlan(parts=parts, modes=tuple(ExecMode.PLAIN for _ in parts))


@dataclass(frozen=True)
class RevCandidate:
    """An additive-coupling block eligible for reversible execution.

    The block computes, for an even-channel entry tensor ``x``::

        lo, hi = split(x)
        y1 = lo + F(hi)          # F = f_chain applied in order
        y2 = hi + G(y1)          # G = g_chain applied in order
        out = concat(y1, y2)

    so the entry and every interior activation can be reconstructed from
    ``out`` alone during the backward pass.
    """

    part: Subgraph
    split_channels: int
    entry: int
    split_lo: int
    split_hi: int
    y1: int
    y2: int
    out: int
    f_chain: tuple[int, ...]
    g_chain: tuple[int, ...]

    @property
    def coupling_body(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return (self.f_chain, self.g_chain)
