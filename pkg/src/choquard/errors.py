"""Exception types shared across the package."""


class ChoquardError(Exception):
    pass


class DomainError(ChoquardError, ValueError):
    """A parameter lies outside the range where a formula is defined."""


class GridMismatchError(ChoquardError, ValueError):
    """Fields or kernels built on different grids were combined."""


class PreconditionError(ChoquardError, ValueError):
    pass


class ProjectionError(ChoquardError, RuntimeError):
    """The Nehari ray could not be bracketed (field is numerically zero)."""


class DegenerateInitError(ChoquardError, RuntimeError):
    pass


class InsufficientTailError(ChoquardError, RuntimeError):
    pass


class FitError(ChoquardError, RuntimeError):
    pass


class MonotonicityViolation(ChoquardError, AssertionError):
    pass
