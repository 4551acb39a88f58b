"""Exception taxonomy shared across the package.

Every error raised by the library derives from :class:`SchoolCountError`
and carries the name of the subsystem that raised it, so CLI output can
categorize failures.
"""


class SchoolCountError(Exception):
    """Base class for all library errors."""

    module = "schoolcount"

    def __init__(self, message, module=None):
        super().__init__(message)
        if module is not None:
            self.module = module


class ValidationError(SchoolCountError):
    """Input violated a documented precondition or invariant."""


class AnnotationError(ValidationError):
    """Annotation document could not be parsed or failed validation."""

    module = "imagedata"


class ShapeError(ValidationError):
    """Array dimensions incompatible with the operation."""


class CheckpointError(SchoolCountError):
    module = "checkpoint"


class CheckpointVersionError(CheckpointError):
    """Checkpoint file format version unsupported by this build."""


class CheckpointCorruptionError(CheckpointError):
    """Checkpoint payload failed its integrity check."""


class CheckpointConfigError(CheckpointError):
    """Checkpoint was produced under an incompatible model configuration."""


class DivergenceError(SchoolCountError):
    """Training produced non-finite values."""

    module = "trainer"
