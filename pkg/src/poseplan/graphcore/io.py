"""Graph spec files.

A graph is stored as a UTF-8 JSON document::

    {"nodes": [{"id": 0, "op": "input", "inputs": [], "shape": [4, 8, 8],
                "elem_bytes": 4}, ...]}

Split nodes carry an extra ``"split_half"`` field (0 or 1) selecting the
channel half they produce.  ``dumps_graph`` emits a canonical form, so a
load/save pair round-trips the document bit-exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..errors import GraphValidationError
from .model import ComputationGraph, NodeSpec, OpKind


def graph_to_dict(g: ComputationGraph) -> dict:
    nodes = []
    for n in g.nodes:
        d = {
            "id": n.id,
            "op": n.op.value,
            "inputs": list(n.inputs),
            "shape": list(n.shape),
            "elem_bytes": n.elem_bytes,
        }
        if n.op is OpKind.SPLIT:
            d["split_half"] = n.split_half
        nodes.append(d)
    return {"nodes": nodes}


def graph_from_dict(doc: dict) -> ComputationGraph:
    if not isinstance(doc, dict) or "nodes" not in doc:
        raise GraphValidationError("graph document must be an object with a 'nodes' array")
    nodes = []
    for entry in doc["nodes"]:
        try:
            nodes.append(
                NodeSpec(
                    id=int(entry["id"]),
                    op=OpKind(entry["op"]),
                    inputs=tuple(entry.get("inputs", ())),
                    shape=tuple(entry["shape"]),
                    elem_bytes=int(entry.get("elem_bytes", 4)),
                    split_half=int(entry.get("split_half", 0)),
                )
            )
        except (KeyError, ValueError) as exc:
            raise GraphValidationError(f"bad node entry {entry!r}: {exc}") from exc
    return ComputationGraph(tuple(nodes))


def dumps_graph(g: ComputationGraph) -> str:
    return json.dumps(graph_to_dict(g), indent=2) + "\n"


def loads_graph(text: str) -> ComputationGraph:
    return graph_from_dict(json.loads(text))


def save_graph(g: ComputationGraph, path: str | Path) -> None:
    Path(path).write_text(dumps_graph(g), encoding="utf-8")


def load_graph(path: str | Path) -> ComputationGraph:
    return loads_graph(Path(path).read_text(encoding="utf-8"))
