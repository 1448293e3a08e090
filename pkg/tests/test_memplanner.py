import numpy as np
import pytest

from poseplan.errors import IneligibleReversible
from poseplan.graphcore import ComputationGraph, NodeSpec, OpKind, Subgraph
from poseplan.harness import build_unet_graph, random_graph
from poseplan.memplanner import (
    ExecMode,
    PartitionPlan,
    all_plain_plan,
    apply_rev_substitutions,
    build_schedule,
    find_rev_candidates,
    normalize_plan,
    plan,
    plan_checkpoints,
    plan_reversible_only,
    plan_report,
    simulate_peak_memory,
    walk_live_bytes,
)

from conftest import chain_graph, coupling_graph
from oracles import brute_force_min_peak


def test_single_node_plain_peak():
    g = ComputationGraph((NodeSpec(0, OpKind.INPUT, (), (4, 8), 8),))
    assert simulate_peak_memory(g, all_plain_plan(g)) == 2 * g.size_bytes(0)


def test_checkpoint_chain_strictly_below_plain(chain4):
    plain = simulate_peak_memory(chain4, all_plain_plan(chain4))
    plan_ck = normalize_plan(
        chain4,
        [Subgraph(frozenset({0})), Subgraph(frozenset({1, 2})), Subgraph(frozenset({3}))],
        [ExecMode.PLAIN, ExecMode.CHECKPOINT, ExecMode.PLAIN],
    )
    assert simulate_peak_memory(chain4, plan_ck) < plain


def test_reversible_forward_excludes_entry(coupling):
    cand = find_rev_candidates(coupling)[0]
    parts = [cand.part] + [
        Subgraph(frozenset({nid}))
        for nid in coupling.node_ids
        if nid not in cand.part.node_ids
    ]
    modes = [ExecMode.REVERSIBLE] + [ExecMode.PLAIN] * (len(parts) - 1)
    sched = build_schedule(coupling, normalize_plan(coupling, parts, modes))
    assert cand.entry in sched.waived
    # the entry activation is freed during the forward pass
    forward = sched.events[: sched.forward_events]
    assert any(e.kind == "free" and e.tensor == "act" and e.node == cand.entry for e in forward)
    assert cand.entry not in sched.keepers


def test_trace_counter_invariants(coupling):
    sched = build_schedule(coupling, all_plain_plan(coupling))
    counters = walk_live_bytes(sched)
    assert all(c >= 0 for c in counters)
    assert counters[-1] == 0


def test_ineligible_reversible_raises(chain4):
    parts = [Subgraph(frozenset({0, 1})), Subgraph(frozenset({2, 3}))]
    modes = [ExecMode.REVERSIBLE, ExecMode.PLAIN]
    with pytest.raises(IneligibleReversible):
        simulate_peak_memory(chain4, PartitionPlan(tuple(parts), tuple(modes)))


def test_plan_single_node_graph():
    g = ComputationGraph((NodeSpec(0, OpKind.INPUT, (), (4, 8), 8),))
    p = plan_checkpoints(g)
    assert p.peak_bytes == simulate_peak_memory(g, all_plain_plan(g))
    assert all(m is ExecMode.PLAIN for m in p.modes)


def test_plan_checkpoints_matches_bruteforce_on_uniform_chain():
    g = chain_graph(9)
    best = plan_checkpoints(g)
    assert best.peak_bytes == brute_force_min_peak(g)


def test_find_rev_candidates_structure(coupling):
    cands = find_rev_candidates(coupling)
    assert len(cands) == 1
    c = cands[0]
    assert c.split_channels == 8
    assert len(c.f_chain) == 2 and len(c.g_chain) == 2
    assert c.entry == 0
    assert coupling.node(c.out).op is OpKind.CONCAT


def test_no_candidates_in_plain_chain():
    assert find_rev_candidates(chain_graph(6)) == []


def test_no_candidates_with_shape_change_inside():
    # downsample between the splits and the concat breaks the equal-shape rule
    s = (4, 4)
    nodes = (
        NodeSpec(0, OpKind.INPUT, (), (4,) + s, 8),
        NodeSpec(1, OpKind.DOWNSAMPLE, (0,), (4, 2, 2), 8),
        NodeSpec(2, OpKind.AFFINE, (1,), (4, 2, 2), 8),
    )
    assert find_rev_candidates(ComputationGraph(nodes)) == []


def test_odd_channel_chain_has_no_candidates():
    g = chain_graph(6, channels=7)
    assert find_rev_candidates(g) == []


def test_candidates_disjoint_on_unet():
    g = build_unet_graph()
    cands = find_rev_candidates(g)
    seen = set()
    for c in cands:
        assert not (seen & c.part.node_ids)
        seen |= c.part.node_ids


def test_apply_rev_substitutions_empty_noop(coupling):
    base = plan_checkpoints(coupling)
    assert apply_rev_substitutions(coupling, base, []) == base


def test_apply_rev_substitutions_monotone(coupling):
    base = plan_checkpoints(coupling)
    out = apply_rev_substitutions(coupling, base, find_rev_candidates(coupling))
    assert out.peak_bytes <= base.peak_bytes


def test_apply_rev_substitutions_skips_invalidating_candidate():
    g = coupling_graph()
    cand = find_rev_candidates(g)[0]
    # one whole-graph part: carving the block out leaves {entry, sink},
    # where the entry feeds the removed block, so the remainder is invalid
    base = normalize_plan(g, [Subgraph(frozenset(g.node_ids))], [ExecMode.PLAIN])
    base = base.with_peak(simulate_peak_memory(g, base))
    assert apply_rev_substitutions(g, base, [cand]) == base


def test_unet_orderings_and_reduction():
    g = build_unet_graph()
    plain = simulate_peak_memory(g, all_plain_plan(g))
    ck = plan_checkpoints(g)
    rv = plan_reversible_only(g)
    full = plan(g)
    assert full.peak_bytes < ck.peak_bytes < plain
    assert rv.peak_bytes < plain
    assert full.peak_bytes <= 0.6 * plain


def test_plan_deterministic():
    g = build_unet_graph(spatial=(8, 8, 8), blocks_per_stage=1)
    a, b = plan(g), plan(g)
    assert a == b
    ra = plan_report(g, a)
    rb = plan_report(g, b)
    assert ra == rb


def test_plan_never_exceeds_plain_random_graphs():
    rng = np.random.default_rng(99)
    for _ in range(12):
        n = int(rng.integers(5, 50))
        g = random_graph(int(rng.integers(0, 1 << 30)), n_nodes=n, p_coupling=0.3)
        p = plan(g)
        assert p.peak_bytes <= simulate_peak_memory(g, all_plain_plan(g))


def test_plan_matches_bruteforce_small_graphs():
    rng = np.random.default_rng(4)
    for _ in range(12):
        g = random_graph(int(rng.integers(0, 1 << 30)), n_nodes=int(rng.integers(4, 8)),
                         p_coupling=0.5)
        assert plan(g).peak_bytes == brute_force_min_peak(g)


def test_plan_report_contents(coupling):
    rep = plan_report(coupling, plan(coupling))
    assert {"parts", "peak_bytes", "all_plain_peak_bytes", "reduction_pct", "events"} <= set(rep)
    assert rep["peak_bytes"] <= rep["all_plain_peak_bytes"]
    assert rep["events"][-1]["live_bytes"] == 0
