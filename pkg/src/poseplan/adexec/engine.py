"""The execution engine: runs a plan's event schedule with real tensors.

Because the engine replays exactly the schedule the memory simulator walks,
its live-byte trace matches the simulated peak by construction; the test
suite still asserts the agreement on every executed (graph, plan) pair.
Executions of distinct (params, input) pairs share no state and can run in
parallel; a single execution is sequential.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..errors import ShapeMismatch
from ..graphcore import ComputationGraph, OpKind
from ..memplanner import PartitionPlan, Schedule, build_schedule
from ..memplanner.schedule import FREE, GRAD_STEP, HOW_OP, PRODUCE, RECOMPUTE
from .ops import needs_input_acts, op_forward, op_vjp
from .tensor import as_tensor, validate_params


@dataclass(frozen=True)
class TraceEvent:
    kind: str
    tensor: str
    node: int
    live_bytes: int


@dataclass
class ExecutionTrace:
    events: list[TraceEvent] = field(default_factory=list)

    def record(self, kind: str, tensor: str, node: int, live: int) -> None:
        if live < 0:
            raise AssertionError("live bytes went negative")
        self.events.append(TraceEvent(kind, tensor, node, live))

    @property
    def peak_bytes(self) -> int:
        return max((e.live_bytes for e in self.events), default=0)

    @property
    def final_bytes(self) -> int:
        return self.events[-1].live_bytes if self.events else 0

    def retained_nodes_after_forward(self, n_forward_events: int) -> set[int]:
        live: set[int] = set()
        for e in self.events[:n_forward_events]:
            if e.tensor != "act":
                continue
            if e.kind == FREE:
                live.discard(e.node)
            else:
                live.add(e.node)
        return live


@dataclass
class ExecutionResult:
    output: np.ndarray
    trace: ExecutionTrace
    input_grad: np.ndarray | None = None
    param_grads: dict | None = None
    schedule: Schedule | None = None


@lru_cache(maxsize=512)
def _cached_schedule(g: ComputationGraph, plan: PartitionPlan, forward_only: bool) -> Schedule:
    return build_schedule(g, plan, forward_only=forward_only)


def _single_input_id(g: ComputationGraph) -> int:
    ids = g.input_ids
    if len(ids) != 1:
        raise ShapeMismatch(f"execution needs exactly one input node, graph has {len(ids)}")
    return ids[0]


def execute(
    g: ComputationGraph,
    params,
    input_value,
    plan: PartitionPlan,
    loss_grad=None,
) -> ExecutionResult:
    validate_params(g, params)
    input_id = _single_input_id(g)
    x_in = as_tensor(input_value, g.node(input_id).shape)
    forward_only = loss_grad is None
    if not forward_only:
        loss_grad = as_tensor(loss_grad, g.node(g.output_id).shape)
    sched = _cached_schedule(g, plan, forward_only)

    acts: dict[int, np.ndarray] = {}
    grads: dict[int, np.ndarray] = {}
    param_grads: dict[int, dict[str, np.ndarray]] = {}
    output_value: np.ndarray | None = None
    input_grad: np.ndarray | None = None
    live = 0
    trace = ExecutionTrace()
    out_id = g.output_id

    for ev in sched.events:
        node = g.node(ev.node)
        if ev.kind == PRODUCE or ev.kind == RECOMPUTE:
            if ev.how == HOW_OP:
                if node.op is OpKind.INPUT:
                    value = x_in
                else:
                    value = op_forward(node, [acts[i] for i in node.inputs], params)
            elif ev.how[0] == "slice_lo":
                src = acts[ev.how[1]]
                value = src[: node.channels].copy()
            elif ev.how[0] == "slice_hi":
                src = acts[ev.how[1]]
                value = src[node.channels :].copy()
            elif ev.how[0] == "sub":
                value = acts[ev.how[1]] - acts[ev.how[2]]
            else:  # cat2
                value = np.concatenate([acts[ev.how[1]], acts[ev.how[2]]], axis=0)
            acts[ev.node] = value
            if ev.node == out_id:
                output_value = value
            live += node.size_bytes()
        elif ev.kind == GRAD_STEP:
            if ev.node == out_id:
                grads[out_id] = loss_grad.copy()
                live += node.size_bytes()
            gy = grads[ev.node]
            if node.op is not OpKind.INPUT:
                in_vals = [acts[i] for i in node.inputs] if needs_input_acts(node.op) else None
                in_channels = [g.node(i).channels for i in node.inputs]
                in_grads, dparams = op_vjp(node, in_vals, gy, params, in_channels)
                if dparams is not None:
                    store = param_grads.setdefault(ev.node, {})
                    for k, v in dparams.items():
                        if k in store:
                            store[k] += v
                        else:
                            store[k] = v
                for src, gin in zip(node.inputs, in_grads):
                    if src in grads:
                        grads[src] += gin
                    else:
                        grads[src] = gin.copy()
                        live += g.size_bytes(src)
            if ev.node == input_id:
                input_grad = grads[ev.node]
        else:  # FREE
            if ev.tensor == "act":
                acts.pop(ev.node)
            else:
                grads.pop(ev.node)
            live -= node.size_bytes()
        trace.record(ev.kind, ev.tensor, ev.node, live)

    if acts or grads:
        raise AssertionError("schedule left tensors live")
    if output_value is None:
        raise AssertionError("schedule never produced the output")
    if not forward_only:
        for spec in g.nodes:
            if spec.op is OpKind.AFFINE and spec.id not in param_grads:
                param_grads[spec.id] = {
                    "w": np.zeros_like(params[spec.id]["w"]),
                    "b": np.zeros_like(params[spec.id]["b"]),
                }
    return ExecutionResult(
        output=output_value,
        trace=trace,
        input_grad=input_grad,
        param_grads=param_grads if not forward_only else None,
        schedule=sched,
    )


def forward(g, params, input_value, plan) -> tuple[np.ndarray, ExecutionTrace]:
    res = execute(g, params, input_value, plan, loss_grad=None)
    return res.output, res.trace


def backward(g, params, input_value, plan, loss_grad) -> ExecutionResult:
    return execute(g, params, input_value, plan, loss_grad=loss_grad)
