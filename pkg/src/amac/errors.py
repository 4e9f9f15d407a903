"""Exception types shared across the package."""


class AmacError(Exception):
    """Base class for all package errors."""


class DimensionError(AmacError, ValueError):
    """Alphabet sizes / array shapes do not agree."""


class DomainError(AmacError, ValueError):
    """An argument lies outside the domain of the operation."""


class UsageError(AmacError, ValueError):
    """Operation called with an invalid combination of arguments."""


class InfeasibleError(AmacError, ValueError):
    """The requested object does not exist for the given parameters."""


class CapacityError(InfeasibleError):
    """Not enough distinct sequences in a type class for the requested code."""


class RefusalError(AmacError, ValueError):
    """Problem size exceeds what an exhaustive routine is willing to handle."""


class ConvergenceError(AmacError, RuntimeError):
    """An iterative routine hit its iteration cap.

    ``best`` holds the last (best) iterate and ``residual`` its residual, so
    callers can decide whether the partial answer is usable.
    """

    def __init__(self, message, best=None, residual=None, bracket=None):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.bracket = bracket


class SolverError(AmacError, RuntimeError):
    """Root bracketing failed (e.g. non-monotone values from numeric noise)."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket
