"""Exception types shared across the package."""


class PosePlanError(Exception):
    """Base class for all errors raised by this package."""


class GraphValidationError(PosePlanError):
    """A graph definition violates a structural invariant."""


class CycleDetected(GraphValidationError):
    """The node dependencies contain a cycle."""


class UnknownNode(PosePlanError):
    """A referenced node id does not exist in the graph."""


class IneligibleReversible(PosePlanError):
    """A partition part was assigned reversible execution but is not an
    additive-coupling block."""


class ShapeMismatch(PosePlanError):
    """Tensor or heatmap shapes are inconsistent with the operation."""


class OddChannels(PosePlanError):
    """A channel split requires an even leading extent."""


class OutOfGrid(PosePlanError):
    """A coordinate falls outside the voxel grid bounds."""


class DegenerateFrame(PosePlanError):
    """The three reference landmarks are (near-)collinear, so no orientation
    frame can be built."""


class DegenerateConfiguration(PosePlanError):
    """Registration landmarks are (near-)collinear; the rigid fit is not
    unique."""


class LibraryTooSmall(PosePlanError):
    """Fewer reference poses available than the requested retrieval count."""


class ConfigError(PosePlanError):
    """An experiment configuration file failed to parse or validate."""
