"""
Peakon Flows

Two independent routes for the time evolution of a peakon state:

1. Direct adaptive integration of the peakon equations
       dq_j/dt = 1/2 sum_k exp(-|q_j - q_k|) p_k
       dp_j/dt = 1/2 p_j sum_k sgn(q_j - q_k) exp(-|q_j - q_k|) p_k
2. The factorization solution of the Toda flow dL/dt = +-1/2 [P_k L, L]:
   factor exp(+-1/2 t L0) = b_- b_+^{-1} and conjugate L(t) = b_+^T L0 b_+.

S_minus states pair with the (-) flow and S_plus states with the (+) flow.
Conserved quantities (P, H, tr L^m) are tracked in a pandas ledger.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from scipy.integrate import OdeSolution
from scipy.interpolate import CubicHermiteSpline

from .algebra import Matrix, commutator, project_skew, require_symmetric, sym_exp
from .errors import (
    CollisionError,
    DimensionError,
    OverflowGuardError,
    SectorError,
    StepSizeError,
)
from .factorization import factorize
from .integrator import PIControlledDOP853
from .models import IntegratorConfig, max_step_or_inf
from .semiseparable import lax_from_state
from .states import FlowSign, PeakonState, Sector

logger = logging.getLogger(__name__)

# toda_step refuses dt * lambda_max beyond this
OVERFLOW_GUARD = 50.0
# toda_solve keeps substeps below SAFE_EXPONENT / lambda_max
SAFE_EXPONENT = 25.0


# ==========================================================================
# VECTOR FIELD AND CONSERVED QUANTITIES
# ==========================================================================

def _peakon_field(q: np.ndarray, p: np.ndarray):
    diff = q[:, None] - q[None, :]
    kernel = np.exp(-np.abs(diff))
    dq = 0.5 * kernel @ p
    dp = 0.5 * p * ((np.sign(diff) * kernel) @ p)
    return dq, dp


def rhs(s: PeakonState):
    """Peakon vector field at s, with sgn(0) = 0.

    Returns:
        Tuple (dq, dp) of arrays in the original index order
    """
    return _peakon_field(s.q, s.p)


def momentum(s: PeakonState) -> float:
    """P = sum_j p_j."""
    return float(np.sum(s.p))


def hamiltonian(s: PeakonState) -> float:
    """H = 1/4 sum_ij exp(-|q_i - q_j|) p_i p_j."""
    kernel = np.exp(-np.abs(s.q[:, None] - s.q[None, :]))
    return float(0.25 * s.p @ kernel @ s.p)


def lax_traces(s: PeakonState, m_max: int = 3) -> List[float]:
    """tr L^m for m = 1..m_max."""
    L = lax_from_state(s).matrix
    power = np.eye(s.n)
    traces = []
    for _ in range(m_max):
        power = power @ L
        traces.append(float(np.trace(power)))
    return traces


def conserved_table(times: np.ndarray, q: np.ndarray, p: np.ndarray) -> pd.DataFrame:
    """Ledger of P, H and tr L^m (m = 1, 2, 3) per recorded time."""
    distance = np.abs(q[:, :, None] - q[:, None, :])
    root_p = np.sqrt(p)
    L = 0.5 * np.exp(-0.5 * distance) * root_p[:, :, None] * root_p[:, None, :]
    L2 = L @ L
    return pd.DataFrame({
        "t": times,
        "P": p.sum(axis=1),
        "H": 0.25 * np.einsum("ti,tij,tj->t", p, np.exp(-distance), p),
        "tr_L1": np.einsum("tii->t", L),
        "tr_L2": np.einsum("tii->t", L2),
        "tr_L3": np.einsum("tij,tji->t", L2, L),
    })


# ==========================================================================
# TRAJECTORY
# ==========================================================================

@dataclass
class StepDiagnostics:
    """Step statistics of one integration."""
    accepted: int = 0
    rejected: int = 0
    max_rhs_norm: float = 0.0
    min_gap: float = math.inf
    t_reached: float = 0.0

    def to_dict(self) -> Dict:
        return {
            "accepted": self.accepted,
            "rejected": self.rejected,
            "max_rhs_norm": self.max_rhs_norm,
            "min_gap": self.min_gap if math.isfinite(self.min_gap) else None,
            "t_reached": self.t_reached,
        }


@dataclass(eq=False)
class Trajectory:
    """Time-stamped peakon states with conserved-quantity ledger.

    Attributes:
        times: Strictly increasing sample times
        q: Positions, shape (len(times), n), original index order
        p: Momenta, same shape
        sector: Sector shared by every state
        ledger: Conserved quantities per sample
        diagnostics: Step statistics
        dense: Solver interpolant when dense output was requested
    """
    times: np.ndarray
    q: np.ndarray
    p: np.ndarray
    sector: Sector
    ledger: pd.DataFrame
    diagnostics: StepDiagnostics = field(default_factory=StepDiagnostics)
    dense: Optional[OdeSolution] = None

    def __post_init__(self):
        if self.times.size == 0:
            raise DimensionError("trajectory has no samples")
        if np.any(np.diff(self.times) <= 0.0):
            raise DimensionError("trajectory times must be strictly increasing")

    def __len__(self) -> int:
        return self.times.size

    @property
    def n(self) -> int:
        return self.q.shape[1]

    @property
    def interpolation(self) -> str:
        """How state_at fills times between samples."""
        return "dense" if self.dense is not None else "hermite"

    def state(self, i: int) -> PeakonState:
        return PeakonState(self.q[i], self.p[i], self.sector)

    def states(self) -> List[PeakonState]:
        return [self.state(i) for i in range(len(self))]

    @property
    def initial(self) -> PeakonState:
        return self.state(0)

    @property
    def final(self) -> PeakonState:
        return self.state(-1)

    def state_at(self, t: float) -> PeakonState:
        """State at time t, interpolated between samples.

        Uses the solver interpolant if present, else cubic Hermite
        interpolation on (q, p) with derivatives from the vector field.
        """
        if not self.times[0] <= t <= self.times[-1]:
            raise DimensionError(f"t={t} outside recorded range [{self.times[0]}, {self.times[-1]}]")
        hit = np.flatnonzero(self.times == t)
        if hit.size:
            return self.state(int(hit[0]))
        if self.dense is not None:
            y = self.dense(t)
        else:
            y = self._hermite()(t)
        return PeakonState(y[: self.n], y[self.n:], self.sector)

    def _hermite(self) -> CubicHermiteSpline:
        y = np.hstack([self.q, self.p])
        dy = np.array([np.concatenate(_peakon_field(qi, pi)) for qi, pi in zip(self.q, self.p)])
        return CubicHermiteSpline(self.times, y, dy, axis=0)

    def canonical(self):
        """(q, p) arrays in canonical (relabeled) column order."""
        order = self.sector.order(self.n)
        return self.q[:, order], self.p[:, order]

    def extended(self, other: "Trajectory") -> "Trajectory":
        """Concatenate a continuation that starts at this trajectory's final time."""
        if other.times[0] != self.times[-1] or other.sector != self.sector:
            raise DimensionError("continuation must start at the final sample in the same sector")
        diagnostics = StepDiagnostics(
            accepted=self.diagnostics.accepted + other.diagnostics.accepted,
            rejected=self.diagnostics.rejected + other.diagnostics.rejected,
            max_rhs_norm=max(self.diagnostics.max_rhs_norm, other.diagnostics.max_rhs_norm),
            min_gap=min(self.diagnostics.min_gap, other.diagnostics.min_gap),
            t_reached=other.diagnostics.t_reached,
        )
        dense = None
        if self.dense is not None and other.dense is not None:
            dense = OdeSolution(
                np.concatenate([self.dense.ts, other.dense.ts[1:]]),
                list(self.dense.interpolants) + list(other.dense.interpolants),
            )
        return Trajectory(
            times=np.concatenate([self.times, other.times[1:]]),
            q=np.vstack([self.q, other.q[1:]]),
            p=np.vstack([self.p, other.p[1:]]),
            sector=self.sector,
            ledger=pd.concat([self.ledger, other.ledger.iloc[1:]], ignore_index=True),
            diagnostics=diagnostics,
            dense=dense,
        )


# ==========================================================================
# ODE ROUTE
# ==========================================================================

def integrate(s0: PeakonState, cfg: IntegratorConfig, t0: float = 0.0) -> Trajectory:
    """Integrate the peakon equations from s0 over [t0, t0 + cfg.t_end].

    The sector ordering is checked after every accepted step. The initial
    and final states are always recorded; intermediate ones every
    cfg.output_stride accepted steps.

    Raises:
        CollisionError: If two positions come within cfg.collision_tol
        StepSizeError: If the step size underflows or max_steps is exceeded
    """
    n = s0.n
    sector = s0.sector

    def fun(t, y):
        dq, dp = _peakon_field(y[:n], y[n:])
        return np.concatenate([dq, dp])

    t_bound = t0 + cfg.t_end
    solver = PIControlledDOP853(
        fun, t0, np.concatenate([s0.q, s0.p]), t_bound,
        rtol=cfg.rel_tol, atol=cfg.abs_tol,
        first_step=cfg.first_step, max_step=max_step_or_inf(cfg),
    )
    logger.debug(f"integrate n={n} sector={sector.tag} t=[{t0}, {t_bound}] rtol={cfg.rel_tol:g}")

    times = [t0]
    qs = [s0.q.copy()]
    ps = [s0.p.copy()]
    interpolants = []
    diagnostics = StepDiagnostics(min_gap=s0.min_gap(), t_reached=t0)
    steps = 0

    while solver.status == "running":
        message = solver.step()
        if solver.status == "failed":
            raise StepSizeError(
                f"integration failed at t={solver.t:.6g}: {message}",
                {"t": float(solver.t), "q": solver.y[:n].tolist(), "p": solver.y[n:].tolist()},
            )
        steps += 1
        q, p = solver.y[:n], solver.y[n:]

        gaps = sector.ordering_gaps(q)
        min_gap = float(np.min(gaps)) if gaps.size else math.inf
        if min_gap < cfg.collision_tol or not np.all(np.isfinite(solver.y)) or np.any(p <= 0.0):
            j = int(np.argmin(gaps)) + 1 if gaps.size else 1
            raise CollisionError(
                f"positions collided at t={solver.t:.6g} (canonical gap {j}: {min_gap:.3e})",
                {"t": float(solver.t), "canonical_index": j, "gap": min_gap,
                 "q": q.tolist(), "p": p.tolist()},
            )
        if steps > cfg.max_steps:
            raise StepSizeError(
                f"exceeded {cfg.max_steps} steps at t={solver.t:.6g}",
                {"t": float(solver.t), "steps": steps},
            )

        diagnostics.min_gap = min(diagnostics.min_gap, min_gap)
        diagnostics.max_rhs_norm = max(diagnostics.max_rhs_norm, float(np.linalg.norm(solver.f)))
        if cfg.dense_output:
            interpolants.append(solver.dense_output())
        if steps % cfg.output_stride == 0 or solver.status == "finished":
            times.append(solver.t)
            qs.append(q.copy())
            ps.append(p.copy())

    diagnostics.accepted = solver.n_accepted
    diagnostics.rejected = solver.n_rejected
    diagnostics.t_reached = float(solver.t)

    times_arr = np.asarray(times)
    q_arr = np.asarray(qs)
    p_arr = np.asarray(ps)
    dense = None
    if cfg.dense_output and interpolants:
        ts = np.concatenate([[t0], [interp.t for interp in interpolants]])
        dense = OdeSolution(ts, interpolants)

    trajectory = Trajectory(
        times=times_arr, q=q_arr, p=p_arr, sector=sector,
        ledger=conserved_table(times_arr, q_arr, p_arr),
        diagnostics=diagnostics, dense=dense,
    )
    logger.debug(f"integrate done: {diagnostics.accepted} accepted, {diagnostics.rejected} rejected")
    return trajectory


# ==========================================================================
# FACTORIZATION ROUTE
# ==========================================================================

def hierarchy_rhs(L, j: int = 1, sign: FlowSign = FlowSign.PLUS) -> Matrix:
    """Vector field +-1/2 [P_k L^j, L] of the j-th hierarchy flow (j = 1 is Toda)."""
    L = require_symmetric(L, "L")
    if j < 1:
        raise DimensionError(f"hierarchy index must be >= 1, got {j}")
    Lj = np.linalg.matrix_power(L, j)
    return FlowSign(sign).factor * 0.5 * commutator(project_skew(Lj), L)


def _generator(L: Matrix, power: int) -> Matrix:
    S = np.linalg.matrix_power(L, power)
    return 0.5 * (S + S.T)


def _spectral_radius(S: Matrix) -> float:
    return float(np.max(np.abs(np.linalg.eigvalsh(S))))


def toda_step(L, dt: float, sign: FlowSign, power: int = 1) -> Matrix:
    """One factorization step of the Toda (or hierarchy) flow.

    Factors exp(+-1/2 dt L^power) = b_- b_+^{-1} and returns b_+^T L b_+.

    Raises:
        SymmetryError: If L is not symmetric
        OverflowGuardError: If |dt| * lambda_max(L^power) > 50
    """
    L = require_symmetric(L, "L")
    if dt == 0.0:
        return L.copy()
    S = _generator(L, power)
    radius = _spectral_radius(S)
    if abs(dt) * radius > OVERFLOW_GUARD:
        raise OverflowGuardError(
            f"dt * lambda_max = {abs(dt) * radius:.3g} exceeds {OVERFLOW_GUARD:g}",
            {"dt": dt, "lambda_max": radius},
        )
    pair = factorize(sym_exp(S, FlowSign(sign).factor * 0.5 * dt))
    out = pair.b_plus.T @ L @ pair.b_plus
    return 0.5 * (out + out.T)


def toda_solve(L0, t: float, sign: FlowSign, dt_max: float = 0.5, power: int = 1) -> Matrix:
    """Compose toda_step over uniform substeps.

    Substeps are no longer than dt_max and no longer than 25 / lambda_max,
    so the overflow guard of toda_step is never reached.
    """
    L = require_symmetric(L0, "L0")
    if dt_max <= 0:
        raise DimensionError(f"dt_max must be positive, got {dt_max}")
    if t == 0.0:
        return L.copy()
    radius = _spectral_radius(_generator(L, power))
    limit = min(dt_max, SAFE_EXPONENT / radius) if radius > 0 else dt_max
    steps = max(1, math.ceil(abs(t) / limit))
    h = t / steps
    for _ in range(steps):
        L = toda_step(L, h, sign, power)
    return L


def lax_velocity_residual(s: PeakonState) -> float:
    """Compare d/dt lax_from_state along the peakon field with the Toda field of the sector.

    Differentiating L_ij = 1/2 exp(-|q_i - q_j|/2) sqrt(p_i p_j) gives
    dL_ij = L_ij (-1/2 sgn(q_i - q_j)(dq_i - dq_j) + 1/2 (dp_i/p_i + dp_j/p_j)).
    """
    canonical = s.relabeled()
    q, p = canonical.q, canonical.p
    dq, dp = _peakon_field(q, p)
    L = lax_from_state(canonical).matrix
    rate = dp / p
    dL = L * (
        -0.5 * np.sign(q[:, None] - q[None, :]) * (dq[:, None] - dq[None, :])
        + 0.5 * (rate[:, None] + rate[None, :])
    )
    expected = hierarchy_rhs(L, 1, s.sector.flow_sign)
    return float(np.max(np.abs(dL - expected)))


def lax_to_state(L, q_ref: float, sector: Sector) -> PeakonState:
    """Recover the peakon state of a Lax matrix up to translation.

    p_j = 2 L_jj and consecutive canonical gaps are
    -2 ln(L_{j,j+1} / sqrt(L_jj L_{j+1,j+1})). q_ref anchors the first
    canonical position q_pi(1).

    Raises:
        SectorError: If a nearest-neighbour ratio is not in (0, 1)
    """
    L = require_symmetric(L, "L")
    diag = np.diag(L)
    if np.any(diag <= 0.0):
        raise SectorError("Lax matrix needs a positive diagonal")
    p_canon = 2.0 * diag
    ratios = np.diag(L, 1) / np.sqrt(diag[:-1] * diag[1:])
    if np.any(ratios <= 0.0) or np.any(ratios >= 1.0):
        j = int(np.argmax((ratios <= 0.0) | (ratios >= 1.0))) + 1
        raise SectorError(
            f"off-diagonal ratio {ratios[j - 1]:.6g} at ({j}, {j + 1}) has no real gap",
            {"index": j, "ratio": float(ratios[j - 1])},
        )
    gaps = -2.0 * np.log(ratios)
    steps = np.concatenate([[0.0], np.cumsum(gaps)])
    q_canon = q_ref + steps if sector.flow_sign is FlowSign.MINUS else q_ref - steps

    inverse = sector.inverse_order(L.shape[0])
    return PeakonState(q_canon[inverse], p_canon[inverse], sector)


def route_discrepancy(s0: PeakonState, cfg: IntegratorConfig, dt_max: float = 0.5,
                      trajectory: Optional[Trajectory] = None) -> Dict:
    """Max entry difference between the two routes at t_end.

    Returns:
        Dict with the discrepancy, the factorization-route matrix's spectral
        drift and the final ODE Lax matrix
    """
    if trajectory is None:
        trajectory = integrate(s0, cfg)
    t_end = float(trajectory.times[-1] - trajectory.times[0])
    L0 = lax_from_state(s0).matrix
    L_ode = lax_from_state(trajectory.final).matrix
    L_fact = toda_solve(L0, t_end, s0.sector.flow_sign, dt_max)
    reference = np.linalg.eigvalsh(L0)
    return {
        "t": t_end,
        "max_discrepancy": float(np.max(np.abs(L_ode - L_fact))),
        "factorization_spectral_drift": float(np.max(np.abs(np.linalg.eigvalsh(L_fact) - reference) / reference)),
        "ode_spectral_drift": float(np.max(np.abs(np.linalg.eigvalsh(L_ode) - reference) / reference)),
    }


# ==========================================================================
# REPORTS
# ==========================================================================

@dataclass
class ConservedReport:
    """Per-sample conserved quantities and their max relative drift."""
    table: pd.DataFrame
    drift: Dict[str, float]

    def to_dict(self) -> Dict:
        return {"drift": self.drift, "samples": len(self.table)}


def conserved_report(tr: Trajectory) -> ConservedReport:
    """Ledger of P, H and tr L^m with max relative drift of each column."""
    table = tr.ledger.copy()
    drift = {}
    for column in ("P", "H", "tr_L1", "tr_L2", "tr_L3"):
        initial = table[column].iloc[0]
        drift[column] = float((table[column] - initial).abs().max() / abs(initial))
    return ConservedReport(table=table, drift=drift)


def apriori_bounds_check(tr: Trajectory, slack: float = 1e-9) -> Dict:
    """Check ||q(t)||_inf <= ||q(0)||_inf + P t/2 and p_j(t) <= p_j(0) exp(P t/2).

    The momentum bound is compared in log form so long runs do not overflow.
    """
    P = float(tr.ledger["P"].iloc[0])
    elapsed = tr.times - tr.times[0]
    q_inf = np.max(np.abs(tr.q), axis=1)
    q_bound = q_inf[0] + 0.5 * P * elapsed
    position_margin = float(np.min(q_bound - q_inf))

    log_excess = np.log(tr.p) - (np.log(tr.p[0])[None, :] + 0.5 * P * elapsed[:, None])
    momentum_margin = float(-np.max(log_excess))

    scale = 1.0 + float(np.max(np.abs(q_bound)))
    return {
        "position_ok": bool(position_margin >= -slack * scale),
        "momentum_ok": bool(momentum_margin >= -slack),
        "position_margin": position_margin,
        "momentum_margin": momentum_margin,
    }
