from .plan import ExecMode, PartitionPlan, RevCandidate, all_plain_plan, normalize_plan
from .candidates import find_rev_candidates
from .schedule import Event, Schedule, build_schedule
from .simulate import peak_of_schedule, simulate_peak_memory, walk_live_bytes
from .search import (
    apply_rev_substitutions,
    plan,
    plan_checkpoints,
    plan_reversible_only,
)
from .report import plan_report

__all__ = [
    "ExecMode",
    "PartitionPlan",
    "RevCandidate",
    "all_plain_plan",
    "normalize_plan",
    "find_rev_candidates",
    "Event",
    "Schedule",
    "build_schedule",
    "peak_of_schedule",
    "simulate_peak_memory",
    "walk_live_bytes",
    "apply_rev_substitutions",
    "plan",
    "plan_checkpoints",
    "plan_reversible_only",
    "plan_report",
]
