from .registration import RigidTransform, register, registration_error
from .library import (
    DEFAULT_TOP_K,
    PoseLibrary,
    load_library,
    retrieve_topk,
    save_library,
)
from .refine import (
    REFINE_ITERS,
    REFINE_STEP,
    PseudoLabel,
    RefinableModel,
    RefineResult,
    pseudo_label,
    refine,
    ssl_loss,
    ssl_loss_grad,
)

__all__ = [
    "RigidTransform",
    "register",
    "registration_error",
    "DEFAULT_TOP_K",
    "PoseLibrary",
    "load_library",
    "retrieve_topk",
    "save_library",
    "REFINE_ITERS",
    "REFINE_STEP",
    "PseudoLabel",
    "RefinableModel",
    "RefineResult",
    "pseudo_label",
    "refine",
    "ssl_loss",
    "ssl_loss_grad",
]
