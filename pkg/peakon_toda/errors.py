"""
Exceptions for peakon-toda.

Every failure raised by the library derives from PeakonError so callers
(the CLI in particular) can map them onto exit codes in one place.
"""

from typing import Dict, Optional


class PeakonError(Exception):
    """Base class for all library errors.

    Args:
        message: Human readable description (indices are 1-based)
        diagnostic: Optional machine-readable context written by the CLI
    """

    def __init__(self, message: str, diagnostic: Optional[Dict] = None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}

    def to_dict(self) -> Dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "error": type(self).__name__,
            "message": str(self),
            "diagnostic": self.diagnostic,
        }


# ==========================================================================
# INPUT / CONTRACT ERRORS
# ==========================================================================

class DimensionError(PeakonError, ValueError):
    """Operands have incompatible shapes."""


class SymmetryError(PeakonError, ValueError):
    """A symmetric input was required."""


class SectorError(PeakonError, ValueError):
    """Positions or momenta violate the sector invariants."""


class ConfigError(PeakonError, ValueError):
    """Run configuration failed validation."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message, {"field": field} if field else None)
        self.field = field


class InsufficientDataError(PeakonError, ValueError):
    """Not enough samples or runs to compute a statistic."""


# ==========================================================================
# NUMERICAL FAILURES
# ==========================================================================

class NumericalError(PeakonError):
    """Base class for failures of the numerical routes (CLI exit code 3)."""


class NearSingularError(NumericalError):
    """A factor such as 1 - e_j^2 vanished to working precision."""


class RankDeficiencyError(NumericalError):
    """Factorization pivot fell below the rank threshold."""


class OverflowGuardError(NumericalError):
    """A step would exponentiate beyond the safe range."""


class SpectrumError(NumericalError):
    """Eigendecomposition failed or violated the Lax spectral contract."""


class CollisionError(NumericalError):
    """Two positions approached each other during integration."""


class StepSizeError(NumericalError):
    """The adaptive integrator could not keep the step above its floor."""
