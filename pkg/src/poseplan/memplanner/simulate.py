"""Peak-memory simulation over an event schedule."""

from __future__ import annotations

from ..graphcore import ComputationGraph
from .plan import PartitionPlan
from .schedule import FREE, Schedule, build_schedule


def walk_live_bytes(sched: Schedule) -> list[int]:
    """The live-byte counter after each event, in schedule order."""
    g = sched.graph
    live = 0
    out = []
    for ev in sched.events:
        if ev.kind == FREE:
            live -= g.size_bytes(ev.node)
        else:
            for _, _, nbytes in ev.allocs:
                live += nbytes
        if live < 0:
            raise AssertionError("live-byte counter went negative")
        out.append(live)
    if out and out[-1] != 0:
        raise AssertionError("live-byte counter must end at zero")
    return out


def peak_of_schedule(sched: Schedule) -> int:
    peak = 0
    for v in walk_live_bytes(sched):
        if v > peak:
            peak = v
    return peak


def simulate_peak_memory(g: ComputationGraph, plan: PartitionPlan,
                         validate: bool = True) -> int:
    """Deterministic maximum of live bytes over the forward+backward timeline.

    Raises IneligibleReversible when a reversible part is not an
    additive-coupling block.
    """
    return peak_of_schedule(build_schedule(g, plan, validate=validate))
