from .synth import (
    DEFAULT_GRID,
    SyntheticCase,
    corrupt_pose,
    make_case,
    random_rotation,
    swap_group,
    synth_pose,
    template_pose,
)
from .model import BASIS_GAIN, ChannelHeadModel, build_case_basis
from .metrics import (
    PCK_DELTA_MM,
    PCK_TAU_MAX_MM,
    MetricReport,
    ed_error,
    pck_auc,
    pck_csv,
)
from .unet import build_unet_graph
from .randgraph import random_graph
from .pipeline import (
    PipelineConfig,
    apply_side_resolution,
    build_library,
    dumps_report,
    load_pipeline_config,
    run_pipeline,
)

__all__ = [
    "DEFAULT_GRID",
    "SyntheticCase",
    "corrupt_pose",
    "make_case",
    "random_rotation",
    "swap_group",
    "synth_pose",
    "template_pose",
    "BASIS_GAIN",
    "ChannelHeadModel",
    "build_case_basis",
    "PCK_DELTA_MM",
    "PCK_TAU_MAX_MM",
    "MetricReport",
    "ed_error",
    "pck_auc",
    "pck_csv",
    "build_unet_graph",
    "random_graph",
    "PipelineConfig",
    "apply_side_resolution",
    "build_library",
    "dumps_report",
    "load_pipeline_config",
    "run_pipeline",
]
