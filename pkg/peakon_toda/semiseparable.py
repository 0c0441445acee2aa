"""
Semiseparable Lax Operator

Builds the symmetric Lax matrix L_ij = 1/2 exp(-|q_i - q_j|/2) sqrt(p_i p_j)
of a peakon state, its rank-one factors, the product formula for the leading
principal minors and the tridiagonal inverse J of the increasing-position
sector, together with the eigenvector recurrences that J induces.

Matrices are always assembled in the canonical (relabeled) order of the state.
S_plus states reuse the S_minus formulas after the reversal j -> n+1-j.
"""

import logging
from dataclasses import dataclass
from typing import Dict

import numpy as np
import scipy.linalg

from .algebra import Matrix, as_matrix, dual_project_lower, dual_project_skew
from .errors import DimensionError, NearSingularError, RankDeficiencyError, SectorError
from .factorization import FactorizationPair
from .states import PeakonState, SectorKind

logger = logging.getLogger(__name__)

# Gaps below this make 1 - e_j^2 vanish in the J entries
MIN_GAP = 1e-12


# ==========================================================================
# DATA TYPES
# ==========================================================================

@dataclass(frozen=True, eq=False)
class LaxOperator:
    """Lax matrix of a peakon state with its semiseparable factors.

    For kind S_minus the upper triangle is L_ij = u_i v_j (i <= j); for
    S_plus it is the transposed pattern L_ij = v_i u_j. The factors are
    built from positions shifted by the midpoint of the hull, which leaves
    every product u_i v_j unchanged.

    Attributes:
        matrix: Symmetric positive definite n x n array
        u: Increasing-ratio factor, u_j = exp(q_j/2) sqrt(p_j/2)
        v: Decreasing-ratio factor, v_j = exp(-q_j/2) sqrt(p_j/2)
        state: Canonical state the matrix was built from
    """
    matrix: Matrix
    u: np.ndarray
    v: np.ndarray
    state: PeakonState

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def kind(self) -> SectorKind:
        return self.state.sector.kind

    def trace(self) -> float:
        return float(np.trace(self.matrix))


@dataclass(frozen=True, eq=False)
class TridiagonalInverse:
    """Tridiagonal inverse J of an S_minus Lax matrix.

    Attributes:
        a: Diagonal a_1..a_n
        b: Off-diagonal magnitudes b_1..b_{n-1} (J carries -b_j)
        e: Gap factors e_1..e_{n-1}, e_j = exp(-(q_{j+1} - q_j)/2)
    """
    a: np.ndarray
    b: np.ndarray
    e: np.ndarray

    @property
    def n(self) -> int:
        return self.a.size

    def matrix(self) -> Matrix:
        """Assemble the dense tridiagonal matrix."""
        return np.diag(self.a) - np.diag(self.b, 1) - np.diag(self.b, -1)

    def inverse_residual(self, L) -> float:
        """max |J L - I|."""
        L = as_matrix(L, "L")
        return float(np.max(np.abs(self.matrix() @ L - np.eye(self.n))))

    def to_dict(self) -> Dict:
        return {"a": self.a.tolist(), "b": self.b.tolist(), "e": self.e.tolist()}


# ==========================================================================
# CONSTRUCTION
# ==========================================================================

def lax_from_state(s: PeakonState) -> LaxOperator:
    """Assemble the Lax operator of a peakon state in canonical order.

    Args:
        s: Valid peakon state (validated at construction)

    Returns:
        LaxOperator with exact diagonal p_j/2
    """
    canonical = s.relabeled()
    q, p = canonical.q, canonical.p

    distance = np.abs(q[:, None] - q[None, :])
    root_p = np.sqrt(p)
    L = 0.5 * np.exp(-0.5 * distance) * np.outer(root_p, root_p)
    np.fill_diagonal(L, 0.5 * p)

    shifted = q - 0.5 * (q.max() + q.min())
    half_p = np.sqrt(0.5 * p)
    u = np.exp(0.5 * shifted) * half_p
    v = np.exp(-0.5 * shifted) * half_p
    return LaxOperator(matrix=L, u=u, v=v, state=canonical)


def _increasing_data(lax: LaxOperator):
    """Positions and momenta of the S_minus form, reversing S_plus input."""
    state = lax.state if lax.kind is SectorKind.S_MINUS else lax.state.reversed()
    return state.q, state.p


def leading_minor_dets(lax: LaxOperator) -> np.ndarray:
    """Leading principal minors from the product formula.

    det L^(k) = prod_{j<=k} (p_j/2)(1 - exp(-(q_j - q_{j-1}))), with the
    first factor equal to p_1/2.

    Raises:
        SectorError: If the factors have the S_plus orientation
    """
    if lax.kind is not SectorKind.S_MINUS:
        raise SectorError(
            "leading_minor_dets needs the S_minus orientation; reverse S_plus states first"
        )
    q, p = lax.state.q, lax.state.p
    factors = 0.5 * p.copy()
    factors[1:] *= -np.expm1(-np.diff(q))
    return np.cumprod(factors)


def _gap_factors(q: np.ndarray):
    gaps = np.diff(q)
    if gaps.size and np.min(gaps) < MIN_GAP:
        j = int(np.argmin(gaps)) + 1
        raise NearSingularError(
            f"gap q_{j + 1} - q_{j} = {gaps[j - 1]:.3e} is below {MIN_GAP:g}; 1 - e_{j}^2 vanishes",
            {"index": j, "gap": float(gaps[j - 1])},
        )
    e = np.exp(-0.5 * gaps)
    one_minus_e2 = -np.expm1(-gaps)
    return e, one_minus_e2


def tridiagonal_inverse(s: PeakonState) -> TridiagonalInverse:
    """Tridiagonal inverse J of lax_from_state(s) for an S_minus state.

    Uses e_0 = e_n = 0 at the truncation boundary, which makes J the exact
    two-sided inverse of the n x n Lax matrix.

    Raises:
        SectorError: If s is not in an S_minus sector
        NearSingularError: If a gap is below 1e-12
    """
    if s.sector.kind is not SectorKind.S_MINUS:
        raise SectorError(f"tridiagonal inverse is defined for S_minus states, got {s.sector.tag}")
    q, p = s.canonical_arrays()
    e, one_minus_e2 = _gap_factors(q)

    # pad with the boundary values e_0 = e_n = 0
    e2 = np.concatenate([[0.0], e ** 2, [0.0]])
    denom = np.concatenate([[1.0], one_minus_e2, [1.0]])
    a = (2.0 / p) * (1.0 - e2[:-1] * e2[1:]) / (denom[:-1] * denom[1:])
    b = 2.0 * e / (np.sqrt(p[:-1] * p[1:]) * one_minus_e2)
    return TridiagonalInverse(a=a, b=b, e=e)


# ==========================================================================
# RECURRENCES
# ==========================================================================

def _check_spectrum(s: PeakonState, spec) -> None:
    if spec.Phi.shape != (s.n, s.n):
        raise DimensionError(f"spectrum has size {spec.Phi.shape[0]}, state has n={s.n}")


def recurrence_residual(s: PeakonState, spec) -> float:
    """Max residual of b_j phi_k(j+1) = -b_{j-1} phi_k(j-1) + (a_j - 1/lambda_k) phi_k(j).

    Evaluated for every row j = 1..n and every k with b_0 = b_n = 0, so the
    last row reads 0 = -b_{n-1} phi_k(n-1) + (a_n - 1/lambda_k) phi_k(n).
    """
    _check_spectrum(s, spec)
    J = tridiagonal_inverse(s)
    Phi = spec.Phi
    b = np.concatenate([[0.0], J.b, [0.0]])
    padded = np.vstack([np.zeros((1, s.n)), Phi, np.zeros((1, s.n))])

    lhs = b[1:, None] * padded[2:]
    rhs = -b[:-1, None] * padded[:-2] + (J.a[:, None] - 1.0 / spec.lambdas[None, :]) * Phi
    return float(np.max(np.abs(lhs - rhs)))


def scaled_recurrence_residual(s: PeakonState, spec) -> float:
    """Residual of the recurrence multiplied through by 1/2 sqrt(p_j)(1 - e_j^2).

    e_j phi(j+1)/sqrt(p_{j+1}) = -e_{j-1}(1-e_j^2)/(1-e_{j-1}^2) phi(j-1)/sqrt(p_{j-1})
                                 + 1/2 (1-e_j^2) p_j (a_j - 1/lambda) phi(j)/sqrt(p_j)

    Rows j = 1..n with e_0 = e_n = 0.
    """
    _check_spectrum(s, spec)
    q, p = s.canonical_arrays()
    J = tridiagonal_inverse(s)
    e, one_minus_e2 = _gap_factors(q)
    psi = spec.Phi / np.sqrt(p)[:, None]
    padded = np.vstack([np.zeros((1, s.n)), psi, np.zeros((1, s.n))])

    e = np.concatenate([[0.0], e, [0.0]])
    one_minus_e2 = np.concatenate([[1.0], one_minus_e2, [1.0]])
    lhs = e[1:, None] * padded[2:]
    rhs = (
        -(e[:-1] * one_minus_e2[1:] / one_minus_e2[:-1])[:, None] * padded[:-2]
        + (0.5 * one_minus_e2[1:] * p)[:, None]
        * (J.a[:, None] - 1.0 / spec.lambdas[None, :])
        * psi
    )
    return float(np.max(np.abs(lhs - rhs)))


# ==========================================================================
# SEMISEPARABILITY AND THE COADJOINT ACTION
# ==========================================================================

def semiseparable_defect(M) -> float:
    """Largest |2x2 minor| of the upper triangular pattern.

    Minors use rows i < i' and columns j < j' with i' <= j.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    worst = 0.0
    for i in range(n - 1):
        for i2 in range(i + 1, n - 1):
            a = M[i, i2:]
            b = M[i2, i2:]
            minors = np.outer(a, b) - np.outer(b, a)
            upper = np.triu(minors, 1)
            if upper.size:
                worst = max(worst, float(np.max(np.abs(upper))))
    return worst


def is_semiseparable(M, tol: float = 1e-9) -> bool:
    """True iff every upper-pattern 2x2 minor vanishes within tol * max|M|^2."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or not np.all(np.isfinite(M)):
        return False
    scale = float(np.max(np.abs(M))) if M.size else 0.0
    if scale == 0.0:
        return True
    return semiseparable_defect(M) <= tol * scale ** 2


def coadjoint_action(g: FactorizationPair, L) -> Matrix:
    """Ad*_g L = P*_l(b_- L b_-^{-1}) + P*_k(b_+ L b_+^{-1}).

    Raises:
        DimensionError: On size mismatch
        RankDeficiencyError: If b_minus has a zero pivot
    """
    L = as_matrix(L, "L")
    b_minus = as_matrix(g.b_minus, "b_minus")
    b_plus = as_matrix(g.b_plus, "b_plus")
    if b_minus.shape != L.shape or b_plus.shape != L.shape:
        raise DimensionError(f"group element of size {b_minus.shape[0]} acting on L of size {L.shape[0]}")
    pivots = np.abs(np.diag(b_minus))
    if np.min(pivots) == 0.0:
        raise RankDeficiencyError("b_minus is singular")

    X = b_minus @ L
    # X b_-^{-1} = (b_-^{-T} X^T)^T
    lower_part = scipy.linalg.solve_triangular(b_minus, X.T, trans="T", lower=True).T
    skew_part = b_plus @ L @ b_plus.T
    return dual_project_lower(lower_part) + dual_project_skew(skew_part)
