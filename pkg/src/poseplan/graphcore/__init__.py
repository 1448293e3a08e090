from .model import (
    ComputationGraph,
    NodeSpec,
    OpKind,
    Subgraph,
    is_valid_partition,
    is_valid_subgraph,
    topological_order,
)
from .io import (
    dumps_graph,
    graph_from_dict,
    graph_to_dict,
    load_graph,
    loads_graph,
    save_graph,
)

__all__ = [
    "ComputationGraph",
    "NodeSpec",
    "OpKind",
    "Subgraph",
    "is_valid_partition",
    "is_valid_subgraph",
    "topological_order",
    "dumps_graph",
    "graph_from_dict",
    "graph_to_dict",
    "load_graph",
    "loads_graph",
    "save_graph",
]
