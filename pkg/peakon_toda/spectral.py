"""
Spectral Data of Lax Operators

Symmetric eigendecomposition with descending eigenvalues and first-row
positive eigenvectors, the closed-form evolution of first eigenvector
components under the (-) flow and of exterior-power projections under the
(+) flow, and the residual checks that compare them with the factorization
route.
"""

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from scipy.special import logsumexp

from .algebra import Matrix, as_matrix, require_symmetric
from .errors import DimensionError, SpectrumError
from .flows import toda_solve
from .semiseparable import LaxOperator
from .states import FlowSign

logger = logging.getLogger(__name__)

DEFAULT_RTOL = 1e-10
GAP_RTOL = 1e-12
MIN_FIRST_COMPONENT = 1e-13


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigen-data lambda_1 > ... > lambda_n with orthonormal columns Phi[:, k].

    Attributes:
        lambdas: Eigenvalues in strictly descending order
        Phi: Orthogonal matrix, column k is phi_k with Phi[0, k] >= 0
        residual: max |L Phi - Phi diag(lambda)|
    """
    lambdas: np.ndarray
    Phi: Matrix
    residual: float

    @property
    def n(self) -> int:
        return self.lambdas.size

    @property
    def first_row(self) -> np.ndarray:
        return self.Phi[0].copy()

    def orthogonality_residual(self) -> float:
        return float(np.max(np.abs(self.Phi.T @ self.Phi - np.eye(self.n))))

    def reconstruct(self) -> Matrix:
        """Phi diag(lambda) Phi^T, symmetrized."""
        L = (self.Phi * self.lambdas) @ self.Phi.T
        return 0.5 * (L + L.T)

    def to_dict(self) -> Dict:
        return {
            "lambdas": self.lambdas.tolist(),
            "phi_first_row": self.first_row.tolist(),
            "residual": self.residual,
        }


# ==========================================================================
# EIGENDECOMPOSITION
# ==========================================================================

def eigendecompose(
    L: Union[Matrix, LaxOperator],
    tol: Optional[float] = None,
    lax: Optional[bool] = None,
) -> Spectrum:
    """Eigendecomposition with the descending / first-row-positive convention.

    Args:
        L: Symmetric matrix or LaxOperator
        tol: Residual tolerance, default 1e-10 * max|L|
        lax: Apply the Lax contract (positive simple spectrum, nonzero first
            components). Defaults to True for LaxOperator input.

    Returns:
        Spectrum

    Raises:
        SymmetryError: If L is not symmetric
        SpectrumError: On convergence failure, residual above tol or a
            violated Lax contract
    """
    if lax is None:
        lax = isinstance(L, LaxOperator)
    M = require_symmetric(L.matrix if isinstance(L, LaxOperator) else L, "L")
    scale = float(np.max(np.abs(M)))
    if tol is None:
        tol = DEFAULT_RTOL * max(scale, np.finfo(float).tiny)

    try:
        w, V = scipy.linalg.eigh(M)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise SpectrumError(f"eigendecomposition failed: {e}")

    lambdas = w[::-1].copy()
    Phi = V[:, ::-1].copy()
    Phi *= np.where(Phi[0] < 0.0, -1.0, 1.0)

    residual = float(np.max(np.abs(M @ Phi - Phi * lambdas)))
    if residual > tol:
        raise SpectrumError(f"eigen residual {residual:.3e} exceeds tolerance {tol:.3e}")

    if lax:
        _check_lax_contract(lambdas, Phi)

    return Spectrum(lambdas=lambdas, Phi=Phi, residual=residual)


def _check_lax_contract(lambdas: np.ndarray, Phi: Matrix) -> None:
    if lambdas[-1] <= 0.0:
        raise SpectrumError(f"Lax spectrum must be positive, smallest eigenvalue {lambdas[-1]:.3e}")
    gaps = -np.diff(lambdas)
    if gaps.size and np.min(gaps) <= GAP_RTOL * lambdas[0]:
        k = int(np.argmin(gaps)) + 1
        raise SpectrumError(
            f"eigenvalues {k} and {k + 1} are numerically degenerate (gap {gaps[k - 1]:.3e})",
            {"index": k, "gap": float(gaps[k - 1])},
        )
    first = np.abs(Phi[0])
    if np.min(first) <= MIN_FIRST_COMPONENT:
        k = int(np.argmin(first)) + 1
        raise SpectrumError(
            f"first component of eigenvector {k} vanishes ({first[k - 1]:.3e})",
            {"index": k},
        )


def spectrum_drift(reference: np.ndarray, lambdas: np.ndarray) -> float:
    """Max relative drift between two sorted spectra."""
    a = np.sort(np.asarray(reference, dtype=float))[::-1]
    b = np.sort(np.asarray(lambdas, dtype=float))[::-1]
    if a.shape != b.shape:
        raise DimensionError(f"spectra of size {a.size} and {b.size}")
    return float(np.max(np.abs(a - b) / np.abs(a)))


# ==========================================================================
# FIRST COMPONENTS UNDER THE (-) FLOW
# ==========================================================================

def first_component_evolution(spec0: Spectrum, t: float) -> np.ndarray:
    """phi_k(1, t) = exp(-lambda_k t/2) phi_k(1,0) / (sum_j exp(-lambda_j t) phi_j(1,0)^2)^(1/2).

    Evaluated in log space so large t neither overflows nor underflows the
    normalization.
    """
    first = spec0.Phi[0]
    with np.errstate(divide="ignore"):
        log_weights = -0.5 * spec0.lambdas * t + np.log(np.abs(first))
    log_norm = 0.5 * logsumexp(2.0 * log_weights)
    return np.sign(first) * np.exp(log_weights - log_norm)


def ratio_law_residual(spec0: Spectrum, t: float, r: int, s: int, dt_max: float = 0.5) -> float:
    """Relative residual of phi_r(1,t)/phi_s(1,t) * phi_s(1,0)/phi_r(1,0) = exp(-(lambda_r - lambda_s)t/2).

    phi(1, t) is taken from the factorization route of the (-) flow.
    r and s are 1-based eigenvalue indices.
    """
    n = spec0.n
    if not (1 <= r <= n and 1 <= s <= n):
        raise DimensionError(f"indices ({r}, {s}) outside 1..{n}")
    Lt = toda_solve(spec0.reconstruct(), t, FlowSign.MINUS, dt_max)
    first_t = eigendecompose(Lt).Phi[0]
    first_0 = spec0.Phi[0]
    observed = (first_t[r - 1] / first_t[s - 1]) * (first_0[s - 1] / first_0[r - 1])
    expected = np.exp(-0.5 * (spec0.lambdas[r - 1] - spec0.lambdas[s - 1]) * t)
    return float(abs(observed / expected - 1.0))


# ==========================================================================
# EXTERIOR-POWER PROJECTIONS UNDER THE (+) FLOW
# ==========================================================================

def _validate_index_set(n: int, k: int, index_set: Sequence[int]) -> Tuple[int, ...]:
    I = tuple(int(i) for i in index_set)
    if not 1 <= k <= n:
        raise DimensionError(f"order k must satisfy 1 <= k <= {n}, got {k}")
    if len(I) != k or any(b <= a for a, b in zip(I, I[1:])) or I[0] < 1 or I[-1] > n:
        raise DimensionError(f"{I} is not a strictly increasing {k}-subset of 1..{n}")
    return I


def compound_projection(spec_t: Spectrum, k: int, index_set: Sequence[int]) -> float:
    """(e_1 ^ ... ^ e_k, phi_i1 ^ ... ^ phi_ik)^2: the squared minor of Phi on rows 1..k."""
    I = _validate_index_set(spec_t.n, k, index_set)
    cols = np.asarray(I) - 1
    return float(np.linalg.det(spec_t.Phi[:k, cols]) ** 2)


def compound_closed_form(spec0: Spectrum, t: float, k: int) -> Dict[Tuple[int, ...], float]:
    """All k-subset projections at time t predicted from the initial spectrum.

    Weights exp((lambda_i1 + ... + lambda_ik) t) m_I(0)^2 are normalized with
    the largest exponent subtracted first.
    """
    n = spec0.n
    _validate_index_set(n, k, tuple(range(1, k + 1)))
    subsets = list(combinations(range(n), k))
    minors = np.array([np.linalg.det(spec0.Phi[:k, list(c)]) for c in subsets])
    sums = np.array([spec0.lambdas[list(c)].sum() for c in subsets])
    with np.errstate(divide="ignore"):
        log_weights = sums * t + 2.0 * np.log(np.abs(minors))
    values = np.exp(log_weights - logsumexp(log_weights))
    return {tuple(i + 1 for i in c): float(v) for c, v in zip(subsets, values)}


def compound_evolution_check(spec0: Spectrum, t: float, k: int, dt_max: float = 0.5) -> float:
    """Max discrepancy between the closed form and the (+) flow factorization route."""
    predicted = compound_closed_form(spec0, t, k)
    Lt = toda_solve(spec0.reconstruct(), t, FlowSign.PLUS, dt_max)
    spec_t = eigendecompose(Lt)
    discrepancy = max(
        abs(compound_projection(spec_t, k, I) - value) for I, value in predicted.items()
    )
    logger.debug(f"compound check k={k} t={t}: {discrepancy:.3e}")
    return float(discrepancy)


def leading_projection(spec_t: Spectrum, k: int) -> float:
    """Projection onto the leading index set (1..k), which tends to 1 under the (+) flow."""
    return compound_projection(spec_t, k, tuple(range(1, k + 1)))


def diagonal_sum_identity(L_t, spec_t: Spectrum, k: int) -> float:
    """|sum_{i<=k} L_ii - sum_I (lambda_i1 + ... + lambda_ik) * projection(I)|."""
    L_t = as_matrix(L_t, "L_t")
    _validate_index_set(spec_t.n, k, tuple(range(1, k + 1)))
    total = 0.0
    for c in combinations(range(spec_t.n), k):
        I = tuple(i + 1 for i in c)
        total += spec_t.lambdas[list(c)].sum() * compound_projection(spec_t, k, I)
    return float(abs(np.trace(L_t[:k, :k]) - total))
