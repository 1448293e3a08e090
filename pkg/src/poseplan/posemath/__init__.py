from .pose import (
    AMBIGUOUS_SET,
    HEAD_TRUNK,
    LANDMARK_NAMES,
    LEFT_ARM,
    LEFT_LEG,
    N_LANDMARKS,
    REGISTRATION_SET,
    RIGHT_ARM,
    RIGHT_LEG,
    Pose,
    dumps_pose,
    load_pose,
    loads_pose,
    save_pose,
)
from .heatmap import (
    DEFAULT_SIGMA_MM,
    Grid,
    HeatmapStack,
    decode_argmax,
    encode_heatmap,
    encode_pose_stack,
    gaussian_amplitude,
    load_stack,
    save_stack,
)
from .losses import (
    kl_term,
    kl_term_grad,
    pair_loss,
    pair_loss_grad,
    pair_loss_terms,
    total_loss,
    total_loss_grad,
    total_loss_terms,
)
from .laterality import ARM_SIDES, LEG_SIDES, SideAssignment, resolve_left_right

__all__ = [
    "AMBIGUOUS_SET",
    "HEAD_TRUNK",
    "LANDMARK_NAMES",
    "LEFT_ARM",
    "LEFT_LEG",
    "N_LANDMARKS",
    "REGISTRATION_SET",
    "RIGHT_ARM",
    "RIGHT_LEG",
    "Pose",
    "dumps_pose",
    "load_pose",
    "loads_pose",
    "save_pose",
    "DEFAULT_SIGMA_MM",
    "Grid",
    "HeatmapStack",
    "decode_argmax",
    "encode_heatmap",
    "encode_pose_stack",
    "gaussian_amplitude",
    "load_stack",
    "save_stack",
    "kl_term",
    "kl_term_grad",
    "pair_loss",
    "pair_loss_grad",
    "pair_loss_terms",
    "total_loss",
    "total_loss_grad",
    "total_loss_terms",
    "ARM_SIDES",
    "LEG_SIDES",
    "SideAssignment",
    "resolve_left_right",
]
