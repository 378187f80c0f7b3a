"""Truncated-regularization signal and image restoration."""

from .errors import (ConfigurationError, DivergenceError, DomainError, IllPosedOperatorError,
                     InternalInvariantError, TruncRegError, UnsupportedFamilyError)
from .potentials import PotentialFamily, TruncatedPotential, truncate

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError", "DivergenceError", "DomainError", "IllPosedOperatorError",
    "InternalInvariantError", "TruncRegError", "UnsupportedFamilyError",
    "PotentialFamily", "TruncatedPotential", "truncate",
]
