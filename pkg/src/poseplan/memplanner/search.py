"""Plan search: checkpoint planning, reversible substitution, and the
combined planner.

The planner evaluates candidate partitions under the exact event simulator
and keeps the best plan.  Small graphs (<= ``EXHAUSTIVE_NODES`` nodes) get a
complete enumeration of valid partitions, so the result is provably optimal
there; larger graphs get a deterministic portfolio: contiguous topological
segmentations over a byte-budget ladder (with coupling blocks kept atomic)
plus a width-limited constructive beam over part assignments.
"""

from __future__ import annotations

import itertools
import math

from ..graphcore import ComputationGraph, OpKind, Subgraph, is_valid_partition, is_valid_subgraph
from .candidates import find_rev_candidates
from .plan import ExecMode, PartitionPlan, RevCandidate, all_plain_plan, normalize_plan
from .simulate import simulate_peak_memory

EXHAUSTIVE_NODES = 12
BEAM_WIDTH = 16
MODE_COMBO_LIMIT = 2048
GREEDY_SWEEPS = 1


class _Searcher:
    """One partition sweep tracking the best restricted and unrestricted plans."""

    def __init__(self, g: ComputationGraph):
        self.g = g
        self.cands = find_rev_candidates(g)
        self.cand_sets = {c.part.node_ids for c in self.cands}
        self._sim_cache: dict[tuple, int] = {}
        start = all_plain_plan(g)
        self.best_ckpt = self._evaluate(start.parts, start.modes)
        self.best_full = self.best_ckpt

    def _evaluate(self, parts, modes) -> PartitionPlan:
        plan = normalize_plan(self.g, parts, modes)
        key = plan.canonical_key()
        peak = self._sim_cache.get(key)
        if peak is None:
            peak = simulate_peak_memory(self.g, plan, validate=False)
            self._sim_cache[key] = peak
        return plan.with_peak(peak)

    def _eligible_modes(self, part: Subgraph, allow_rev: bool):
        g = self.g
        modes = [ExecMode.PLAIN]
        v_o = part.output_node(g)
        if any(
            nid != v_o and nid != g.output_id and g.node(nid).op is not OpKind.INPUT
            for nid in part.node_ids
        ):
            modes.append(ExecMode.CHECKPOINT)
        if allow_rev and part.node_ids in self.cand_sets:
            modes.append(ExecMode.REVERSIBLE)
        return modes

    def _best_modes(self, parts, allow_rev: bool) -> PartitionPlan:
        options = [self._eligible_modes(p, allow_rev) for p in parts]
        total = math.prod(len(o) for o in options)
        if total <= MODE_COMBO_LIMIT:
            best: PartitionPlan | None = None
            for combo in itertools.product(*options):
                best = _better(best, self._evaluate(parts, combo))
            return best
        # large partitions: greedy coordinate descent from an aggressive
        # start (checkpoint/reversible everywhere it is allowed)
        return self._greedy([o[-1] for o in options], parts, options)

    def _greedy(self, start, parts, options) -> PartitionPlan:
        modes = list(start)
        cur = self._evaluate(parts, modes)
        for _ in range(GREEDY_SWEEPS):
            improved = False
            for i in range(len(parts)):
                for opt in options[i]:
                    if opt == modes[i]:
                        continue
                    trial_modes = modes.copy()
                    trial_modes[i] = opt
                    trial = self._evaluate(parts, trial_modes)
                    if (trial.peak_bytes, trial.canonical_key()) < (
                        cur.peak_bytes,
                        cur.canonical_key(),
                    ):
                        cur, modes = trial, trial_modes
                        improved = True
            if not improved:
                break
        return cur

    def consider(self, member_sets) -> None:
        parts = [Subgraph(frozenset(ms)) for ms in member_sets]
        restricted = self._best_modes(parts, allow_rev=False)
        self.best_ckpt = _better(self.best_ckpt, restricted)
        if any(p.node_ids in self.cand_sets for p in parts):
            self.best_full = _better(self.best_full, self._best_modes(parts, allow_rev=True))
        self.best_full = _better(self.best_full, restricted)


def _better(a: PartitionPlan | None, b: PartitionPlan) -> PartitionPlan:
    if a is None:
        return b
    if (b.peak_bytes, b.canonical_key()) < (a.peak_bytes, a.canonical_key()):
        return b
    return a


# --- partition enumeration ----------------------------------------------


def _enumerate_partitions(g: ComputationGraph):
    """All valid partitions, built constructively in topological order.

    A part "closes" once one of its nodes feeds a node placed elsewhere;
    from then on it may not grow, which is exactly the valid-subgraph
    condition checked incrementally.
    """
    topo = list(g.node_ids)

    def rec(i, parts, closed, part_of):
        if i == len(topo):
            yield tuple(tuple(p) for p in parts)
            return
        nid = topo[i]
        srcs = g.node(nid).inputs
        for ci in range(len(parts) + 1):
            if ci < len(parts) and closed[ci]:
                continue
            newly_closed = []
            ok = True
            for src in srcs:
                pi = part_of[src]
                if pi == ci:
                    continue
                if parts[pi][-1] != src:  # src is no longer its part's last node
                    ok = False
                    break
                if not closed[pi]:
                    closed[pi] = True
                    newly_closed.append(pi)
            if ok:
                if ci == len(parts):
                    parts.append([nid])
                    closed.append(False)
                    part_of[nid] = ci
                    yield from rec(i + 1, parts, closed, part_of)
                    parts.pop()
                    closed.pop()
                else:
                    parts[ci].append(nid)
                    part_of[nid] = ci
                    yield from rec(i + 1, parts, closed, part_of)
                    parts[ci].pop()
                del part_of[nid]
            for pi in newly_closed:
                closed[pi] = False

    yield from rec(0, [], [], {})


def _run_valid(g: ComputationGraph, run) -> bool:
    return is_valid_subgraph(g, Subgraph(frozenset(run)))


def _segment_partitions(g: ComputationGraph, atoms: list[tuple[int, ...]]):
    """Partitions made of contiguous runs of ``atoms`` (atoms stay whole).

    A run may end only when no node of the run other than its output node
    feeds anything outside the run.
    """
    label = g.label
    atom_nodes = [tuple(sorted(a, key=label)) for a in atoms]
    covered = [set(a) for a in atom_nodes]

    def cut_ok(lo: int, hi: int) -> bool:
        run = set().union(*covered[lo : hi + 1])
        out = max(run, key=label)
        for nid in run:
            if nid == out:
                continue
            if any(c not in run for c in g.consumers(nid)):
                return False
        return True

    sizes = [sum(g.size_bytes(n) for n in a) for a in atom_nodes]
    total = sum(sizes)
    budgets = sorted(
        {max(max(sizes), 1)}
        | {total // k for k in (2, 3, 4, 6, 8, 12, 16, 24) if total // k > 0}
        | {total}
    )
    seen = set()
    for budget in budgets:
        parts: list[tuple[int, ...]] = []
        lo = 0
        acc = 0
        for hi in range(len(atom_nodes)):
            acc += sizes[hi]
            last = hi == len(atom_nodes) - 1
            if (acc >= budget or last) and cut_ok(lo, hi):
                parts.append(tuple(sorted(set().union(*covered[lo : hi + 1]))))
                lo = hi + 1
                acc = 0
            elif last:
                # the tail cannot close on its own: merge it backwards
                run = set().union(*covered[lo : hi + 1])
                while parts and not _run_valid(g, tuple(run)):
                    run |= set(parts.pop())
                if _run_valid(g, tuple(run)):
                    parts.append(tuple(sorted(run)))
                else:
                    parts = [tuple(sorted(set(g.node_ids)))]
        key = tuple(parts)
        if key not in seen and all(_run_valid(g, p) for p in parts):
            seen.add(key)
            yield [tuple(p) for p in parts]


def _beam_partitions(g: ComputationGraph, width: int = BEAM_WIDTH):
    """Deterministic beam over constructive part assignments, scored toward
    low retained bytes with a penalty on oversized parts."""
    states = [((), ())]
    for nid in g.node_ids:
        srcs = g.node(nid).inputs
        seen = {}
        for parts, closed in states:
            part_of = {}
            for pi, p in enumerate(parts):
                for m in p:
                    part_of[m] = pi
            for ci in range(len(parts) + 1):
                if ci < len(parts) and closed[ci]:
                    continue
                ok = True
                closing = set()
                for src in srcs:
                    pi = part_of[src]
                    if pi == ci:
                        continue
                    if parts[pi][-1] != src:
                        ok = False
                        break
                    closing.add(pi)
                if not ok:
                    continue
                new_parts = list(parts)
                new_closed = list(closed)
                if ci == len(parts):
                    new_parts.append((nid,))
                    new_closed.append(False)
                else:
                    new_parts[ci] = parts[ci] + (nid,)
                for pi in closing:
                    new_closed[pi] = True
                seen[(tuple(new_parts), tuple(new_closed))] = None
        scored = []
        for parts, closed in seen:
            retained = sum(g.size_bytes(p[-1]) for p in parts)
            bulk = max(sum(g.size_bytes(m) for m in p) for p in parts)
            scored.append((2 * retained + bulk, parts, closed))
        scored.sort(key=lambda t: (t[0], t[1]))
        states = [(parts, closed) for _, parts, closed in scored[:width]]
    for parts, _ in states:
        yield [tuple(p) for p in parts]


def _candidate_partitions(g: ComputationGraph, cands: list[RevCandidate]):
    if len(g.nodes) <= EXHAUSTIVE_NODES:
        yield from _enumerate_partitions(g)
        return

    label = g.label
    singles = [(nid,) for nid in g.node_ids]
    yield singles

    if cands:
        blocks = [tuple(sorted(c.part.node_ids, key=label)) for c in cands]
        block_nodes = set().union(*(c.part.node_ids for c in cands))
        rest = [(nid,) for nid in g.node_ids if nid not in block_nodes]
        yield [tuple(sorted(b)) for b in blocks] + rest
        atoms = sorted(blocks + rest, key=lambda a: min(label(x) for x in a))
        yield from _segment_partitions(g, atoms)
    else:
        yield from _segment_partitions(g, singles)
    yield from _beam_partitions(g)


def _run_search(g: ComputationGraph, budget: int | None = None) -> _Searcher:
    searcher = _Searcher(g)
    seen = set()
    for member_sets in _candidate_partitions(g, searcher.cands):
        key = tuple(sorted(tuple(sorted(ms)) for ms in member_sets))
        if key in seen:
            continue
        seen.add(key)
        searcher.consider(member_sets)
        if budget is not None and searcher.best_ckpt.peak_bytes <= budget:
            break
    return searcher


def plan_checkpoints(g: ComputationGraph, budget: int | None = None) -> PartitionPlan:
    """Best plan over {Plain, Checkpoint} in the planner's search space.

    ``budget`` is an optional early-stop target in bytes: once a plan at or
    under it is found, remaining partition candidates are skipped.
    """
    return _run_search(g, budget).best_ckpt


def plan_reversible_only(g: ComputationGraph) -> PartitionPlan:
    """Coupling blocks run reversibly, everything else plain (no checkpoints)."""
    cands = find_rev_candidates(g)
    block_nodes = set()
    parts: list[Subgraph] = []
    modes: list[ExecMode] = []
    for c in cands:
        parts.append(c.part)
        modes.append(ExecMode.REVERSIBLE)
        block_nodes |= c.part.node_ids
    for nid in g.node_ids:
        if nid not in block_nodes:
            parts.append(Subgraph(frozenset({nid})))
            modes.append(ExecMode.PLAIN)
    plan_ = normalize_plan(g, parts, modes)
    return plan_.with_peak(simulate_peak_memory(g, plan_))


def apply_rev_substitutions(
    g: ComputationGraph, base: PartitionPlan, candidates: list[RevCandidate]
) -> PartitionPlan:
    """Carve each candidate block out of ``base`` when that keeps every
    remainder part valid and strictly lowers the simulated peak."""
    cur_parts = list(base.parts)
    cur_modes = list(base.modes)
    cur_peak = base.peak_bytes
    if cur_peak is None:
        cur_peak = simulate_peak_memory(g, PartitionPlan(tuple(cur_parts), tuple(cur_modes)))

    ordered = sorted(candidates, key=lambda c: min(g.label(i) for i in c.part.node_ids))
    for cand in ordered:
        if any(
            m is ExecMode.REVERSIBLE and cand.part.node_ids & p.node_ids
            for p, m in zip(cur_parts, cur_modes)
        ):
            continue
        new_parts: list[Subgraph] = []
        new_modes: list[ExecMode] = []
        ok = True
        for p, m in zip(cur_parts, cur_modes):
            rem = p.node_ids - cand.part.node_ids
            if not rem:
                continue
            sp = Subgraph(rem)
            if rem != p.node_ids and not is_valid_subgraph(g, sp):
                ok = False
                break
            new_parts.append(sp)
            new_modes.append(m)
        if not ok:
            continue
        new_parts.append(cand.part)
        new_modes.append(ExecMode.REVERSIBLE)
        trial = normalize_plan(g, new_parts, new_modes)
        if not is_valid_partition(g, list(trial.parts)):
            continue
        peak = simulate_peak_memory(g, trial, validate=False)
        if peak < cur_peak:
            cur_parts, cur_modes, cur_peak = list(trial.parts), list(trial.modes), peak
    return normalize_plan(g, cur_parts, cur_modes, cur_peak)


def plan(g: ComputationGraph) -> PartitionPlan:
    """Checkpoint planning, coupling-block detection, and profitable
    reversible substitution; an integrated mode search runs over the same
    partition sweep and the better result wins."""
    searcher = _run_search(g)
    three_step = apply_rev_substitutions(g, searcher.best_ckpt, searcher.cands)
    return _better(three_step, searcher.best_full)
