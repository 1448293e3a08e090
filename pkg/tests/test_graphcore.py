import numpy as np
import pytest

from poseplan.errors import CycleDetected, GraphValidationError, UnknownNode
from poseplan.graphcore import (
    ComputationGraph,
    NodeSpec,
    OpKind,
    Subgraph,
    dumps_graph,
    is_valid_partition,
    is_valid_subgraph,
    loads_graph,
    topological_order,
)
from poseplan.harness import random_graph

from conftest import chain_graph, diamond_graph


def test_chain_has_unique_order():
    g = chain_graph(3)
    assert topological_order(g) == [0, 1, 2]


def test_diamond_tie_break_by_id():
    g = diamond_graph()
    assert topological_order(g) == [0, 1, 2, 3]


def test_cycle_detected():
    s = (2,)
    with pytest.raises(CycleDetected):
        ComputationGraph(
            (
                NodeSpec(0, OpKind.INPUT, (), (2,) + s, 8),
                NodeSpec(1, OpKind.AFFINE, (0, ), (2,) + s, 8),
                NodeSpec(2, OpKind.ADD, (1, 3), (2,) + s, 8),
                NodeSpec(3, OpKind.AFFINE, (2,), (2,) + s, 8),
            )
        )


def test_self_reference_rejected():
    with pytest.raises(GraphValidationError):
        ComputationGraph((NodeSpec(0, OpKind.AFFINE, (0,), (2, 2), 8),))


def test_multi_sink_rejected():
    s = (2,)
    with pytest.raises(GraphValidationError):
        ComputationGraph(
            (
                NodeSpec(0, OpKind.INPUT, (), (2,) + s, 8),
                NodeSpec(1, OpKind.AFFINE, (0,), (2,) + s, 8),
                NodeSpec(2, OpKind.AFFINE, (0,), (2,) + s, 8),
            )
        )


def test_split_requires_even_channels():
    with pytest.raises(GraphValidationError):
        ComputationGraph(
            (
                NodeSpec(0, OpKind.INPUT, (), (7, 4), 8),
                NodeSpec(1, OpKind.SPLIT, (0,), (3, 4), 8),
            )
        )


def test_concat_shape_rules():
    with pytest.raises(GraphValidationError):
        ComputationGraph(
            (
                NodeSpec(0, OpKind.INPUT, (), (2, 4), 8),
                NodeSpec(1, OpKind.INPUT, (), (2, 6), 8),
                NodeSpec(2, OpKind.CONCAT, (0, 1), (4, 4), 8),
            )
        )


def test_singleton_subgraph_always_valid(diamond):
    for nid in diamond.node_ids:
        assert is_valid_subgraph(diamond, Subgraph(frozenset({nid})))


def test_chain_prefix_segments_valid():
    g = chain_graph(6)
    for i in range(6):
        for j in range(i, 6):
            assert is_valid_subgraph(g, Subgraph(frozenset(range(i, j + 1))))


def test_invalid_subgraph_diamond(diamond):
    # node 0 feeds node 2 outside the set while not being the set output
    assert not is_valid_subgraph(diamond, Subgraph(frozenset({0, 1, 3})))


def test_unknown_node_raises(diamond):
    with pytest.raises(UnknownNode):
        is_valid_subgraph(diamond, Subgraph(frozenset({0, 99})))


def test_partition_examples(chain4):
    singletons = [Subgraph(frozenset({i})) for i in chain4.node_ids]
    assert is_valid_partition(chain4, singletons)
    assert is_valid_partition(
        chain4, [Subgraph(frozenset({0, 1})), Subgraph(frozenset({2, 3}))]
    )
    assert not is_valid_partition(
        chain4,
        [Subgraph(frozenset({0, 1})), Subgraph(frozenset({1, 2})), Subgraph(frozenset({3}))],
    )
    assert not is_valid_partition(chain4, [Subgraph(frozenset({0, 1}))])  # uncovered


def test_topological_order_property():
    rng = np.random.default_rng(7)
    for _ in range(25):
        g = random_graph(int(rng.integers(0, 1 << 30)), n_nodes=int(rng.integers(5, 50)))
        order = topological_order(g)
        assert sorted(order) == sorted(g.node_ids)
        pos = {nid: i for i, nid in enumerate(order)}
        for src, dst in g.edges:
            assert pos[src] < pos[dst]
        singletons = [Subgraph(frozenset({i})) for i in g.node_ids]
        assert is_valid_partition(g, singletons)


def test_graph_file_roundtrip(coupling):
    text = dumps_graph(coupling)
    again = loads_graph(text)
    assert again == coupling
    assert dumps_graph(again) == text  # bit-exact canonical form


def test_graph_file_roundtrip_via_disk(tmp_path, diamond):
    from poseplan.graphcore import load_graph, save_graph

    path = tmp_path / "graph.json"
    save_graph(diamond, path)
    assert load_graph(path) == diamond
