import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from poseplan.graphcore import ComputationGraph, NodeSpec, OpKind


def chain_graph(n: int, channels: int = 4, spatial=(8,), elem_bytes: int = 8) -> ComputationGraph:
    nodes = [NodeSpec(0, OpKind.INPUT, (), (channels,) + spatial, elem_bytes)]
    for i in range(1, n):
        nodes.append(NodeSpec(i, OpKind.AFFINE, (i - 1,), (channels,) + spatial, elem_bytes))
    return ComputationGraph(tuple(nodes))


def diamond_graph() -> ComputationGraph:
    s = (4,)
    return ComputationGraph(
        (
            NodeSpec(0, OpKind.INPUT, (), (2,) + s, 8),
            NodeSpec(1, OpKind.AFFINE, (0,), (2,) + s, 8),
            NodeSpec(2, OpKind.NONLINEARITY, (0,), (2,) + s, 8),
            NodeSpec(3, OpKind.ADD, (1, 2), (2,) + s, 8),
        )
    )


def coupling_graph(body: int = 2, channels: int = 8, spatial=(4,)) -> ComputationGraph:
    """input -> coupling block -> affine sink."""
    half = (channels // 2,) + spatial
    full = (channels,) + spatial
    nodes = [NodeSpec(0, OpKind.INPUT, (), full, 8)]
    nid = 1

    def add(op, inputs, shape, split_half=0):
        nonlocal nid
        nodes.append(NodeSpec(nid, op, inputs, shape, 8, split_half))
        nid += 1
        return nid - 1

    lo = add(OpKind.SPLIT, (0,), half, 0)
    hi = add(OpKind.SPLIT, (0,), half, 1)
    cur = hi
    for step in range(body):
        cur = add(OpKind.AFFINE if step % 2 == 0 else OpKind.NONLINEARITY, (cur,), half)
    y1 = add(OpKind.ADD, (lo, cur), half)
    cur = y1
    for step in range(body):
        cur = add(OpKind.AFFINE if step % 2 == 0 else OpKind.NONLINEARITY, (cur,), half)
    y2 = add(OpKind.ADD, (hi, cur), half)
    out = add(OpKind.CONCAT, (y1, y2), full)
    add(OpKind.AFFINE, (out,), full)
    return ComputationGraph(tuple(nodes))


@pytest.fixture
def chain4():
    return chain_graph(4)


@pytest.fixture
def diamond():
    return diamond_graph()


@pytest.fixture
def coupling():
    return coupling_graph()
