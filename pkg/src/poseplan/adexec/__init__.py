from .tensor import (
    TensorValue,
    as_tensor,
    flatten_params,
    init_params,
    unflatten_params,
    validate_params,
    zero_like_params,
)
from .ops import LEAKY_SLOPE, op_forward, op_vjp
from .coupling import rev_forward, rev_inverse
from .engine import ExecutionResult, ExecutionTrace, TraceEvent, backward, execute, forward
from .checks import check_gradients, finite_difference_grads, rel_dev, standard_plans

__all__ = [
    "TensorValue",
    "as_tensor",
    "flatten_params",
    "init_params",
    "unflatten_params",
    "validate_params",
    "zero_like_params",
    "LEAKY_SLOPE",
    "op_forward",
    "op_vjp",
    "rev_forward",
    "rev_inverse",
    "ExecutionResult",
    "ExecutionTrace",
    "TraceEvent",
    "backward",
    "execute",
    "forward",
    "check_gradients",
    "finite_difference_grads",
    "rel_dev",
    "standard_plans",
]
