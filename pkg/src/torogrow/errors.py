"""Exception types raised across the package."""


class TorogrowError(Exception):
    """Base class for all package errors."""


class InputError(TorogrowError, ValueError):
    """Malformed or out-of-domain input (wrong shape, non-finite, bad config)."""


class StructuralError(TorogrowError, ValueError):
    """Input violates an algebraic precondition (not square-zero, not primitive, ...)."""


class HypothesisFailure(TorogrowError):
    """A mathematical hypothesis required by a construction does not hold numerically."""
