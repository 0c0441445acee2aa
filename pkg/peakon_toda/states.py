"""
Peakon Phase-Space States

PeakonState holds positions q and momenta p of a truncated peakon system
together with its sector, the strict ordering of the positions that the flow
preserves. Permuted sectors carry a 1-based permutation pi; the canonical
(relabeled) order of a state is (q_pi(1), ..., q_pi(n)).

Also provides the deterministic initial-data generators used by experiments.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionError, SectorError

logger = logging.getLogger(__name__)


# ==========================================================================
# SECTORS AND FLOW SIGNS
# ==========================================================================

class FlowSign(str, Enum):
    """Sign of the Toda flow dL/dt = +-1/2 [P_k L, L]."""
    PLUS = "plus"
    MINUS = "minus"

    @property
    def factor(self) -> float:
        return 1.0 if self is FlowSign.PLUS else -1.0


class SectorKind(str, Enum):
    """Ordering family: S_minus has increasing positions, S_plus decreasing."""
    S_MINUS = "S_minus"
    S_PLUS = "S_plus"


@dataclass(frozen=True)
class Sector:
    """Sector tag with optional 1-based permutation.

    Attributes:
        kind: S_minus or S_plus
        permutation: (pi(1), ..., pi(n)) or None for the identity
    """
    kind: SectorKind
    permutation: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SectorKind(self.kind))
        if self.permutation is not None:
            perm = tuple(int(i) for i in self.permutation)
            if sorted(perm) != list(range(1, len(perm) + 1)):
                raise SectorError(f"permutation {perm} is not a bijection of 1..{len(perm)}")
            object.__setattr__(self, "permutation", perm)

    @property
    def tag(self) -> str:
        suffix = "_perm" if self.is_permuted else ""
        return f"{self.kind.value}{suffix}"

    @property
    def is_permuted(self) -> bool:
        return self.permutation is not None and any(
            pi != j for j, pi in enumerate(self.permutation, start=1)
        )

    @property
    def flow_sign(self) -> FlowSign:
        return FlowSign.PLUS if self.kind is SectorKind.S_PLUS else FlowSign.MINUS

    def order(self, n: int) -> np.ndarray:
        """0-based index array mapping canonical position j to the original index pi(j)."""
        if self.permutation is None:
            return np.arange(n)
        if len(self.permutation) != n:
            raise DimensionError(f"permutation has length {len(self.permutation)}, state has n={n}")
        return np.asarray(self.permutation, dtype=int) - 1

    def inverse_order(self, n: int) -> np.ndarray:
        """0-based array with inverse_order[i] = pi^{-1}(i+1) - 1."""
        return np.argsort(self.order(n))

    def canonical(self) -> "Sector":
        """The same ordering family with the identity permutation."""
        return Sector(self.kind)

    def ordering_gaps(self, q: np.ndarray) -> np.ndarray:
        """Signed consecutive gaps of the canonical positions; all positive inside the sector."""
        ordered = np.asarray(q, dtype=float)[self.order(len(q))]
        gaps = np.diff(ordered)
        return gaps if self.kind is SectorKind.S_MINUS else -gaps

    def to_dict(self) -> Dict:
        return {
            "tag": self.tag,
            "kind": self.kind.value,
            "permutation": list(self.permutation) if self.permutation else None,
        }


def sector_from_tag(tag: str, permutation: Optional[Sequence[int]] = None) -> Sector:
    """Build a Sector from a tag such as 'S_plus' or 'S_minus_perm'."""
    base = tag[:-5] if tag.endswith("_perm") else tag
    try:
        kind = SectorKind(base)
    except ValueError:
        raise SectorError(f"unknown sector tag '{tag}'")
    if tag.endswith("_perm") and permutation is None:
        raise SectorError(f"sector '{tag}' requires a permutation")
    return Sector(kind, tuple(permutation) if permutation is not None else None)


S_MINUS = Sector(SectorKind.S_MINUS)
S_PLUS = Sector(SectorKind.S_PLUS)


# ==========================================================================
# STATE
# ==========================================================================

@dataclass(frozen=True, eq=False)
class PeakonState:
    """Phase-space point (q, p) of the peakon system in a given sector.

    Raises:
        DimensionError: If q and p have different lengths
        SectorError: If p is not positive, entries are not finite, or the
            positions violate the sector ordering
    """
    q: np.ndarray
    p: np.ndarray
    sector: Sector = field(default=S_MINUS)

    def __post_init__(self):
        q = np.array(self.q, dtype=float).reshape(-1)
        p = np.array(self.p, dtype=float).reshape(-1)
        if q.size == 0 or q.size != p.size:
            raise DimensionError(f"q has {q.size} entries, p has {p.size}; need equal and >= 1")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise SectorError("state has non-finite entries")
        if np.any(p <= 0.0):
            bad = int(np.argmax(p <= 0.0)) + 1
            raise SectorError(f"momenta must be positive; p_{bad} = {p[bad - 1]:g}")
        gaps = self.sector.ordering_gaps(q)
        if gaps.size and np.any(gaps <= 0.0):
            j = int(np.argmax(gaps <= 0.0)) + 1
            raise SectorError(
                f"positions violate {self.sector.tag} ordering at canonical index {j}",
                {"canonical_index": j, "gap": float(gaps[j - 1])},
            )
        q.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.q.size

    def min_gap(self) -> float:
        """Smallest canonical gap, inf for n = 1."""
        gaps = self.sector.ordering_gaps(self.q)
        return float(np.min(gaps)) if gaps.size else float("inf")

    def canonical_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """(q, p) in the relabeled order q_pi(1), ..., q_pi(n)."""
        order = self.sector.order(self.n)
        return self.q[order], self.p[order]

    def relabeled(self) -> "PeakonState":
        """State in canonical order with the identity permutation."""
        q, p = self.canonical_arrays()
        return PeakonState(q, p, self.sector.canonical())

    def reversed(self) -> "PeakonState":
        """Index reversal j -> n+1-j of the canonical state; swaps S_plus and S_minus."""
        q, p = self.canonical_arrays()
        kind = SectorKind.S_MINUS if self.sector.kind is SectorKind.S_PLUS else SectorKind.S_PLUS
        return PeakonState(q[::-1], p[::-1], Sector(kind))

    def translated(self, shift: float) -> "PeakonState":
        return PeakonState(self.q + shift, self.p, self.sector)

    def to_dict(self) -> Dict:
        return {
            "n": self.n,
            "q": self.q.tolist(),
            "p": self.p.tolist(),
            "sector": self.sector.to_dict(),
        }


# ==========================================================================
# INITIAL-DATA GENERATORS
# ==========================================================================

def _scatter(sector: Sector, q_canon: np.ndarray, p_canon: np.ndarray) -> PeakonState:
    inverse = sector.inverse_order(q_canon.size)
    return PeakonState(q_canon[inverse], p_canon[inverse], sector)


def _canonical_positions(sector: Sector, gaps: np.ndarray, q0: float) -> np.ndarray:
    steps = np.concatenate([[0.0], np.cumsum(gaps)])
    return q0 + steps if sector.kind is SectorKind.S_MINUS else q0 - steps


def geometric_state(
    n: int,
    C: float = 1.0,
    r: float = 0.5,
    d: float = 1.0,
    sector: Sector = S_MINUS,
    q0: float = 0.0,
) -> PeakonState:
    """Geometric momentum profile p_j = C r^j with uniform gaps d.

    The profile and positions are laid out in canonical order and scattered
    back through the sector permutation.
    """
    if n < 1:
        raise DimensionError(f"n must be >= 1, got {n}")
    if C <= 0 or not 0 < r < 1 or d <= 0:
        raise SectorError(f"geometric profile needs C > 0, 0 < r < 1, d > 0 (got C={C}, r={r}, d={d})")
    p_canon = C * r ** np.arange(1, n + 1)
    q_canon = _canonical_positions(sector, np.full(n - 1, float(d)), q0)
    return _scatter(sector, q_canon, p_canon)


def random_state(
    n: int,
    rng: np.random.Generator,
    sector: Sector = S_MINUS,
    gap_range: Tuple[float, float] = (0.5, 2.0),
    p_range: Tuple[float, float] = (0.5, 2.0),
) -> PeakonState:
    """Seeded random state with gaps and momenta drawn uniformly from the given ranges."""
    if n < 1:
        raise DimensionError(f"n must be >= 1, got {n}")
    if gap_range[0] <= 0 or p_range[0] <= 0:
        raise SectorError("gap and momentum ranges must be positive")
    gaps = rng.uniform(*gap_range, size=n - 1)
    p_canon = rng.uniform(*p_range, size=n)
    q0 = rng.uniform(-1.0, 1.0)
    return _scatter(sector, _canonical_positions(sector, gaps, q0), p_canon)


def tail_bound(C: float, r: float, n: int) -> float:
    """Velocity contribution of the neglected tail: sum_{k>n} C r^k = C r^(n+1) / (1 - r)."""
    if not 0 < r < 1:
        raise SectorError(f"tail bound needs 0 < r < 1, got r={r}")
    return C * r ** (n + 1) / (1.0 - r)
