"""Exception types raised across the package."""


class SemiQuantumError(Exception):
    """Base class for all package errors."""


class ValidationError(SemiQuantumError, ValueError):
    """An input object violates one of its stated invariants."""


class InvalidDimensionError(ValidationError):
    pass


class InvalidBlochError(ValidationError):
    pass


class InvalidStateError(ValidationError):
    pass


class InvalidPovmError(ValidationError):
    pass


class InvalidTableError(ValidationError):
    pass


class InvalidModelError(ValidationError):
    pass


class InvalidPriorError(ValidationError):
    pass


class NumericConsistencyError(SemiQuantumError, ArithmeticError):
    """A computed quantity left its admissible range by more than round-off."""


class NotTwoRowError(SemiQuantumError, ValueError):
    """The model's conditionals are not partitioned by [s == t] into two rows."""


class ConvergenceError(SemiQuantumError, RuntimeError):
    """An iterative solver stopped before certifying its result.

    ``lower`` and ``upper`` hold the best bounds reached.
    """

    def __init__(self, message, lower=None, upper=None, iterations=None):
        super().__init__(message)
        self.lower = lower
        self.upper = upper
        self.iterations = iterations


class PreconditionError(SemiQuantumError):
    """An operation was called outside the regime where it is defined."""


class SizeGuardError(SemiQuantumError, ValueError):
    """A requested enumeration exceeds the configured size guard."""
