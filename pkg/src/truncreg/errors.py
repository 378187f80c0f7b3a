"""Exception types raised across the package."""


class TruncRegError(Exception):
    """Base class for all package errors."""


class ConfigurationError(TruncRegError, ValueError):
    """Invalid parameters supplied at construction time."""


class DomainError(TruncRegError, ValueError):
    """A function was evaluated outside of its domain."""


class UnsupportedFamilyError(TruncRegError, ValueError):
    """The requested operation is not available for this potential family."""


class InternalInvariantError(TruncRegError, RuntimeError):
    """A mathematical guarantee was violated; indicates a bug or bad input."""


class IllPosedOperatorError(TruncRegError, ValueError):
    """The normal operator A^T A is not invertible."""


class DivergenceError(TruncRegError, RuntimeError):
    """Non-finite values appeared during an iterative solve."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
