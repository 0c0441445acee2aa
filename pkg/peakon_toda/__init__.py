"""
peakon_toda: truncated peakon solutions of the Camassa-Holm equation.

This package provides:
- The r-matrix algebra of the splitting into lower triangular and skew parts
- Semiseparable Lax operators of peakon states and their tridiagonal inverses
- Two solution routes: adaptive ODE integration and QR factorization of the Toda flow
- Spectral identities, long-time asymptotics and wave profiles
- Verification suites and deterministic result files
"""

__version__ = "1.0.0"

from .errors import (
    CollisionError,
    ConfigError,
    DimensionError,
    InsufficientDataError,
    NumericalError,
    PeakonError,
    SectorError,
    SpectrumError,
)
from .states import FlowSign, PeakonState, Sector, SectorKind, geometric_state, random_state
from .semiseparable import lax_from_state, tridiagonal_inverse
from .flows import Trajectory, integrate, rhs, toda_solve, toda_step
from .spectral import Spectrum, eigendecompose
from .asymptotics import AsymptoticsReport, analyze, integrate_until_converged
from .wavefield import evaluate_u, emit_grid
from .models import RunConfig, load_config

__all__ = [
    '__version__',
    'PeakonError',
    'NumericalError',
    'ConfigError',
    'DimensionError',
    'SectorError',
    'SpectrumError',
    'CollisionError',
    'InsufficientDataError',
    'FlowSign',
    'PeakonState',
    'Sector',
    'SectorKind',
    'geometric_state',
    'random_state',
    'lax_from_state',
    'tridiagonal_inverse',
    'Trajectory',
    'integrate',
    'rhs',
    'toda_step',
    'toda_solve',
    'Spectrum',
    'eigendecompose',
    'AsymptoticsReport',
    'analyze',
    'integrate_until_converged',
    'evaluate_u',
    'emit_grid',
    'RunConfig',
    'load_config',
]
