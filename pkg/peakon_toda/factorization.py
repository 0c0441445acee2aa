"""
Factorization G = b_- b_+^{-1}

Splits an invertible matrix into a lower triangular factor with positive
diagonal and an orthogonal factor. The columns of G^T are orthogonalized
(Householder QR, which performs the Gram-Schmidt process stably); the sign
of each column is then fixed so the triangular pivots are positive, which
makes the factorization unique.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .algebra import Matrix, as_matrix
from .errors import DimensionError, RankDeficiencyError

logger = logging.getLogger(__name__)

# Pivot threshold relative to ||G||_2
RANK_RTOL = 1e-13


@dataclass(frozen=True)
class FactorizationPair:
    """Lower triangular b_minus (positive diagonal) and orthogonal b_plus."""
    b_minus: Matrix
    b_plus: Matrix

    @property
    def n(self) -> int:
        return self.b_minus.shape[0]

    def product(self) -> Matrix:
        """Reassemble b_minus b_plus^{-1} = b_minus b_plus^T."""
        return self.b_minus @ self.b_plus.T

    def orthogonality_residual(self) -> float:
        """Max abs entry of b_plus^T b_plus - I."""
        return float(np.max(np.abs(self.b_plus.T @ self.b_plus - np.eye(self.n))))

    @classmethod
    def identity(cls, n: int) -> "FactorizationPair":
        return cls(b_minus=np.eye(n), b_plus=np.eye(n))


def factorize(G) -> FactorizationPair:
    """Factor G = b_minus b_plus^{-1}.

    With G^T = QR and the signs of R's diagonal made positive, b_plus = Q and
    b_minus = R^T.

    Args:
        G: Invertible square matrix

    Returns:
        FactorizationPair

    Raises:
        RankDeficiencyError: If a pivot falls below 1e-13 * ||G||_2
    """
    G = as_matrix(G, "G")
    Q, R = np.linalg.qr(G.T)

    pivots = np.diag(R)
    scale = np.linalg.norm(G, 2)
    smallest = float(np.min(np.abs(pivots)))
    if scale == 0.0 or smallest < RANK_RTOL * scale:
        raise RankDeficiencyError(
            f"factorization pivot {smallest:.3e} below {RANK_RTOL:g} * ||G|| = {RANK_RTOL * scale:.3e}",
            {"min_pivot": smallest, "norm": float(scale)},
        )

    signs = np.where(pivots < 0.0, -1.0, 1.0)
    b_plus = Q * signs
    b_minus = (R * signs[:, None]).T
    return FactorizationPair(b_minus=np.tril(b_minus), b_plus=b_plus)


def group_product(g, h) -> Matrix:
    """Product of the factorization group: g * h = g_- h g_+^{-1}.

    Here g = g_- g_+^{-1} is the factorization of g. If h = h_- h_+^{-1}
    then g * h = (g_- h_-)(g_+ h_+)^{-1}, so factorize(g * h) returns the
    componentwise products.
    """
    g = as_matrix(g, "g")
    h = as_matrix(h, "h")
    if g.shape != h.shape:
        raise DimensionError(f"dimension mismatch: g is {g.shape[0]}x{g.shape[0]}, h is {h.shape[0]}x{h.shape[0]}")
    pair = factorize(g)
    return pair.b_minus @ h @ pair.b_plus.T
