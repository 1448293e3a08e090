"""Structured plan reports for the CLI and the service."""

from __future__ import annotations

from ..graphcore import ComputationGraph
from .plan import ExecMode, PartitionPlan, all_plain_plan
from .schedule import build_schedule
from .simulate import simulate_peak_memory, walk_live_bytes

MODE_NAMES = {ExecMode.PLAIN: "plain", ExecMode.CHECKPOINT: "checkpoint",
              ExecMode.REVERSIBLE: "reversible"}


def plan_report(g: ComputationGraph, plan: PartitionPlan, include_events: bool = True) -> dict:
    peak = plan.peak_bytes
    if peak is None:
        peak = simulate_peak_memory(g, plan)
    plain_peak = simulate_peak_memory(g, all_plain_plan(g))
    report = {
        "parts": [
            {"nodes": sorted(p.node_ids), "mode": MODE_NAMES[m]}
            for p, m in zip(plan.parts, plan.modes)
        ],
        "peak_bytes": peak,
        "all_plain_peak_bytes": plain_peak,
        "peak_pct_of_plain": round(100.0 * peak / plain_peak, 4) if plain_peak else 100.0,
        "reduction_pct": round(100.0 * (1.0 - peak / plain_peak), 4) if plain_peak else 0.0,
    }
    if include_events:
        sched = build_schedule(g, plan)
        live = walk_live_bytes(sched)
        report["events"] = [
            {"event": ev.kind, "tensor": ev.tensor, "node": ev.node, "live_bytes": lb}
            for ev, lb in zip(sched.events, live)
        ]
    return report
