"""Exception types shared across the package."""


class GradedMinError(Exception):
    """Base class for all package errors."""


class SpaceMismatchError(GradedMinError):
    """Operands belong to different declared spaces."""


class IndexRangeError(GradedMinError, IndexError):
    """Seminorm index outside 1..N."""


class EvaluationError(GradedMinError):
    """A functional returned a non-finite value."""

    def __init__(self, message, offending_step=None):
        super().__init__(message)
        self.offending_step = offending_step


class DomainError(GradedMinError):
    """Point outside the declared chart atlas or domain box."""


class PreconditionError(GradedMinError):
    """A documented operation precondition does not hold."""


class DegenerateInputError(GradedMinError):
    """All sampled data was degenerate (zero norms / zero distances)."""


class ConfigError(GradedMinError):
    """Problem-config file failed validation."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
