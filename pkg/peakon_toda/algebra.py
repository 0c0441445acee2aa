"""
Matrix Algebra for the Truncated Hilbert-Schmidt Lie Algebra

Dense real n x n matrices stand in for Hilbert-Schmidt operators. This module
provides the splitting g = l + k (lower triangular + skew-symmetric), the
r-matrix R = P_l - P_k, both Lie brackets, the trace pairing and its dual
projections, the symmetric matrix exponential and compound (exterior power)
matrices.

All indices in docstrings and error messages are 1-based.
"""

import logging
import math
from dataclasses import dataclass
from itertools import combinations
from typing import List, Tuple

import numpy as np
import scipy.linalg

from .errors import DimensionError, SymmetryError

logger = logging.getLogger(__name__)

Matrix = np.ndarray

# Desk-scale guard for compound matrices: k * C(n, k) entries per row block
MAX_COMPOUND_ENTRIES = 10 ** 6

# Relative tolerance for the symmetry check of sym_exp
SYMMETRY_RTOL = 1e-12


# ==========================================================================
# VALIDATION HELPERS
# ==========================================================================

def as_matrix(A, name: str = "A") -> Matrix:
    """Coerce input to a finite square float64 array.

    Args:
        A: Array-like input
        name: Operand name used in error messages

    Returns:
        2-D numpy array

    Raises:
        DimensionError: If A is not square or has non-finite entries
    """
    M = np.asarray(A, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise DimensionError(f"{name} must be a non-empty square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DimensionError(f"{name} has non-finite entries")
    return M


def _same_size(A, B, names: Tuple[str, str] = ("A", "B")) -> Tuple[Matrix, Matrix]:
    A = as_matrix(A, names[0])
    B = as_matrix(B, names[1])
    if A.shape != B.shape:
        raise DimensionError(
            f"dimension mismatch: {names[0]} is {A.shape[0]}x{A.shape[0]}, "
            f"{names[1]} is {B.shape[0]}x{B.shape[0]}"
        )
    return A, B


def symmetry_residual(S: Matrix) -> float:
    """Max abs entry of S - S^T."""
    S = np.asarray(S, dtype=float)
    return float(np.max(np.abs(S - S.T))) if S.size else 0.0


def require_symmetric(S, name: str = "S", rtol: float = SYMMETRY_RTOL) -> Matrix:
    """Return S as an array, raising SymmetryError if it is not symmetric.

    The tolerance is rtol * (1 + max|S|).
    """
    S = as_matrix(S, name)
    residual = symmetry_residual(S)
    if residual > rtol * (1.0 + np.max(np.abs(S))):
        raise SymmetryError(f"{name} is not symmetric (max |{name} - {name}^T| = {residual:.3e})")
    return S


# ==========================================================================
# SPLITTING g = l + k AND THE R-MATRIX
# ==========================================================================

def project_skew(A) -> Matrix:
    """Projection onto the skew-symmetric subalgebra: A_+ - A_+^T."""
    A = as_matrix(A)
    upper = np.triu(A, 1)
    return upper - upper.T


def project_lower(A) -> Matrix:
    """Projection onto the lower triangular subalgebra: A_- + A_0 + A_+^T."""
    A = as_matrix(A)
    return np.tril(A) + np.triu(A, 1).T


def r_matrix(A) -> Matrix:
    """R(A) = P_l(A) - P_k(A)."""
    return project_lower(A) - project_skew(A)


def dual_project_skew(L) -> Matrix:
    """Dual of project_skew under the trace pairing: L_- - L_+^T."""
    L = as_matrix(L, "L")
    return np.tril(L, -1) - np.triu(L, 1).T


def dual_project_lower(L) -> Matrix:
    """Dual of project_lower under the trace pairing: L_+ + L_0 + L_+^T."""
    L = as_matrix(L, "L")
    upper = np.triu(L, 1)
    return upper + np.diag(np.diag(L)) + upper.T


# ==========================================================================
# PAIRINGS AND BRACKETS
# ==========================================================================

def ad_pairing(A, B) -> float:
    """Ad-invariant pairing (A, B) = sum_ij A_ij B_ji = tr(AB)."""
    A, B = _same_size(A, B)
    return float(np.sum(A * B.T))


def hs_inner(A, B) -> float:
    """Hilbert-Schmidt inner product sum_ij A_ij B_ij."""
    A, B = _same_size(A, B)
    return float(np.sum(A * B))


def commutator(A, B) -> Matrix:
    """[A, B] = AB - BA."""
    A, B = _same_size(A, B)
    return A @ B - B @ A


def r_bracket(A, B) -> Matrix:
    """Second Lie bracket [A, B]_R = 1/2 ([R(A), B] + [A, R(B)])."""
    A, B = _same_size(A, B)
    return 0.5 * (commutator(r_matrix(A), B) + commutator(A, r_matrix(B)))


def mybe_residual(A, B) -> Matrix:
    """Left side minus right side of the modified Yang-Baxter equation.

    Returns [R(A), R(B)] - R([R(A), B] + [A, R(B)]) + [A, B], which vanishes
    identically for R = P_l - P_k.
    """
    A, B = _same_size(A, B)
    RA, RB = r_matrix(A), r_matrix(B)
    return (
        commutator(RA, RB)
        - r_matrix(commutator(RA, B) + commutator(A, RB))
        + commutator(A, B)
    )


def lie_poisson_bracket(grad_f1, grad_f2, L) -> float:
    """R-Lie-Poisson bracket {F1, F2}_R(L) = (L, [dF1, dF2]_R).

    Args:
        grad_f1: Gradient dF1(L) as an algebra element
        grad_f2: Gradient dF2(L) as an algebra element
        L: Point of evaluation

    Returns:
        Value of the bracket
    """
    g1, g2 = _same_size(grad_f1, grad_f2, ("gradF1", "gradF2"))
    L, _ = _same_size(L, g1, ("L", "gradF1"))
    return ad_pairing(L, r_bracket(g1, g2))


def hierarchy_gradient(L, j: int) -> Matrix:
    """Gradient L^j of the hierarchy Hamiltonian H_j = tr(L^(j+1)) / (2(j+1))."""
    if j < 0:
        raise DimensionError(f"hierarchy index must be >= 0, got {j}")
    return np.linalg.matrix_power(as_matrix(L, "L"), j)


def hamiltonian_hierarchy(L, j: int) -> float:
    """H_j(L) = tr(L^(j+1)) / (2(j+1))."""
    if j < 1:
        raise DimensionError(f"hierarchy index must be >= 1, got {j}")
    power = np.linalg.matrix_power(as_matrix(L, "L"), j + 1)
    return float(np.trace(power)) / (2.0 * (j + 1))


# ==========================================================================
# EXPONENTIAL
# ==========================================================================

def sym_exp(S, t: float = 1.0) -> Matrix:
    """exp(tS) for symmetric S through the eigendecomposition S = V diag(w) V^T.

    Args:
        S: Symmetric matrix
        t: Scalar multiplier

    Returns:
        Symmetric positive definite exp(tS)

    Raises:
        SymmetryError: If S fails the symmetry tolerance
    """
    S = require_symmetric(S, "S")
    if t == 0.0:
        return np.eye(S.shape[0])
    w, V = scipy.linalg.eigh(S)
    E = (V * np.exp(t * w)) @ V.T
    return 0.5 * (E + E.T)


# ==========================================================================
# COMPOUND MATRICES
# ==========================================================================

@dataclass(frozen=True)
class CompoundMatrix:
    """k-th compound of an n x n matrix.

    Rows and columns are indexed by the strictly increasing k-subsets of
    {1..n} in lexicographic order; entry (I, J) is det M[I, J].
    """
    n: int
    k: int
    index_sets: Tuple[Tuple[int, ...], ...]
    values: np.ndarray

    def position(self, index_set) -> int:
        """Row/column position of a 1-based index set."""
        key = tuple(int(i) for i in index_set)
        try:
            return self.index_sets.index(key)
        except ValueError:
            raise DimensionError(f"{key} is not an increasing {self.k}-subset of 1..{self.n}")

    def entry(self, rows, cols) -> float:
        """Minor det M[rows, cols] for 1-based index sets."""
        return float(self.values[self.position(rows), self.position(cols)])


def index_sets(n: int, k: int) -> List[Tuple[int, ...]]:
    """Strictly increasing k-subsets of {1..n} in lexicographic order."""
    return [tuple(i + 1 for i in c) for c in combinations(range(n), k)]


def compound(M, k: int) -> CompoundMatrix:
    """Compute the k-th compound matrix of M.

    Minors are evaluated by LU with partial pivoting (numpy.linalg.det), one
    row block at a time.

    Args:
        M: Square matrix
        k: Order, 1 <= k <= n

    Returns:
        CompoundMatrix of size C(n, k)

    Raises:
        DimensionError: If k is out of range or the compound is too large
    """
    M = as_matrix(M, "M")
    n = M.shape[0]
    if not 1 <= k <= n:
        raise DimensionError(f"compound order must satisfy 1 <= k <= {n}, got {k}")
    size = math.comb(n, k)
    if k * size > MAX_COMPOUND_ENTRIES:
        raise DimensionError(
            f"compound of order {k} for n={n} has {size} index sets; "
            f"refusing beyond {MAX_COMPOUND_ENTRIES} entries"
        )

    subsets = np.array(list(combinations(range(n), k)), dtype=int)
    values = np.empty((size, size))
    for r, rows in enumerate(subsets):
        # (size, k, k) stack of submatrices M[rows, cols] for every column set
        block = M[rows][:, subsets]
        values[r] = np.linalg.det(np.transpose(block, (1, 0, 2)))

    sets = tuple(tuple(int(i) + 1 for i in s) for s in subsets)
    return CompoundMatrix(n=n, k=k, index_sets=sets, values=values)


# ==========================================================================
# NEUMANN ESTIMATE
# ==========================================================================

def neumann_bound(A, power: int) -> Tuple[float, float]:
    """Both sides of ||A^n||_2 <= ||A||_HS^n / sqrt(n!).

    The estimate is only asserted for strictly lower triangular A; a
    diagonal entry already breaks it (A = [[-1]]).

    Returns:
        (operator norm of A^power, ||A||_HS^power / sqrt(power!))
    """
    A = as_matrix(A)
    lhs = float(np.linalg.norm(np.linalg.matrix_power(A, power), 2))
    rhs = float(np.linalg.norm(A, "fro") ** power / math.sqrt(math.factorial(power)))
    return lhs, rhs
