"""
Long-Time Asymptotics

Post-processing of trajectories against the long-time behaviour of the
peakon lattice: sorting of momenta onto twice the eigenvalues, linear
scattering of positions, separation of peaks, diagonal limits of the Lax
matrix, the sublinear trend of S_minus runs across truncation sizes, and
permuted sectors.

All per-particle arrays in a report are in canonical (relabeled) order.
Targets are taken from the initial spectrum only:
    S_plus:  p'_j -> 2 lambda_j,        slope(q'_j) -> lambda_j
    S_minus: p'_j -> 2 lambda_{n+1-j},  slope(q'_j) -> lambda_{n+1-j}
The S_minus assignment is the finite-truncation limit validated by long
integrations, not a statement about the infinite lattice.
"""

import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import InsufficientDataError, SectorError
from .flows import Trajectory, integrate, rhs
from .models import IntegratorConfig
from .semiseparable import lax_from_state
from .spectral import Spectrum, eigendecompose
from .states import PeakonState, Sector, SectorKind

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 1e-3
MIN_FIT_SAMPLES = 10
MIN_TREND_RUNS = 3
LATE_FRACTION = 0.25
# horizon in units of the inverse smallest spectral gap
HORIZON_SCALE = 32.0


# ==========================================================================
# DATA TYPES
# ==========================================================================

@dataclass(frozen=True)
class SectorPermutation:
    """Permutation pi of 1..n given as (pi(1), ..., pi(n))."""
    n: int
    pi: Tuple[int, ...]

    @classmethod
    def from_sequence(cls, values: Sequence[int]) -> "SectorPermutation":
        pi = tuple(int(v) for v in values)
        return cls(n=len(pi), pi=pi)

    @classmethod
    def identity(cls, n: int) -> "SectorPermutation":
        return cls(n=n, pi=tuple(range(1, n + 1)))

    @property
    def valid(self) -> bool:
        return len(self.pi) == self.n and sorted(self.pi) == list(range(1, self.n + 1))

    def inverse(self) -> Tuple[int, ...]:
        """(pi^{-1}(1), ..., pi^{-1}(n))."""
        if not self.valid:
            raise SectorError(f"{self.pi} is not a permutation of 1..{self.n}")
        inv = [0] * self.n
        for j, value in enumerate(self.pi, start=1):
            inv[value - 1] = j
        return tuple(inv)

    def sector(self, kind: SectorKind) -> Sector:
        if not self.valid:
            raise SectorError(f"{self.pi} is not a permutation of 1..{self.n}")
        return Sector(kind, self.pi)


@dataclass
class SeparationResult:
    """Minimum pairwise gap series and its growth flag."""
    times: List[float]
    min_gaps: List[float]
    separating: bool

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass
class AsymptoticsReport:
    """Long-time diagnostics of one trajectory (canonical order)."""
    sector: Dict
    n: int
    t_end: float
    lambdas: List[float]
    threshold: float = DEFAULT_THRESHOLD

    # sorting
    momenta: List[float] = field(default_factory=list)
    momentum_targets: List[float] = field(default_factory=list)
    momentum_residuals: List[float] = field(default_factory=list)
    sorted_converged: Optional[bool] = None

    # scattering
    window: Optional[Tuple[float, float]] = None
    slopes: List[float] = field(default_factory=list)
    intercepts: List[float] = field(default_factory=list)
    slope_targets: List[float] = field(default_factory=list)
    slope_residuals: List[float] = field(default_factory=list)
    fit_residuals: List[float] = field(default_factory=list)
    speeds: List[float] = field(default_factory=list)
    scattering_converged: Optional[bool] = None

    # separation and diagonal limits
    min_gap_start: Optional[float] = None
    min_gap_end: Optional[float] = None
    separating: Optional[bool] = None
    diagonal_limits: List[float] = field(default_factory=list)

    # auto-extension
    extended: bool = False
    cap_reached: bool = False

    @property
    def converged(self) -> bool:
        flags = [f for f in (self.sorted_converged, self.scattering_converged) if f is not None]
        return bool(flags) and all(flags)

    @property
    def max_momentum_residual(self) -> float:
        return float(max(self.momentum_residuals)) if self.momentum_residuals else float("nan")

    @property
    def max_slope_residual(self) -> float:
        return float(max(self.slope_residuals)) if self.slope_residuals else float("nan")

    def to_dict(self) -> Dict:
        data = asdict(self)
        data["converged"] = self.converged
        return data

    def to_frame(self) -> pd.DataFrame:
        """One row per canonical index j."""
        order = np.arange(1, self.n + 1)
        perm = self.sector.get("permutation") or list(order)
        columns = {
            "j": order,
            "original_index": perm,
            "lambda": self.lambdas,
            "p_end": self.momenta or [np.nan] * self.n,
            "p_target": self.momentum_targets or [np.nan] * self.n,
            "p_residual": self.momentum_residuals or [np.nan] * self.n,
            "slope": self.slopes or [np.nan] * self.n,
            "slope_target": self.slope_targets or [np.nan] * self.n,
            "slope_residual": self.slope_residuals or [np.nan] * self.n,
            "alpha": self.diagonal_limits or [np.nan] * self.n,
        }
        return pd.DataFrame(columns)


# ==========================================================================
# TARGETS
# ==========================================================================

def eigenvalue_targets(spec0: Spectrum, kind: SectorKind) -> np.ndarray:
    """Canonical-order limits of p'_j / 2 and of the speeds of q'_j."""
    if kind is SectorKind.S_PLUS:
        return spec0.lambdas.copy()
    return spec0.lambdas[::-1].copy()


def _base_report(tr: Trajectory, spec0: Spectrum, threshold: float) -> AsymptoticsReport:
    if spec0.n != tr.n:
        raise SectorError(f"spectrum of size {spec0.n} for a trajectory with n={tr.n}")
    return AsymptoticsReport(
        sector=tr.sector.to_dict(),
        n=tr.n,
        t_end=float(tr.times[-1]),
        lambdas=spec0.lambdas.tolist(),
        threshold=threshold,
    )


# ==========================================================================
# CHECKS
# ==========================================================================

def sorting_check(
    tr: Trajectory,
    spec0: Spectrum,
    threshold: float = DEFAULT_THRESHOLD,
    expected_kind: Optional[SectorKind] = None,
    report: Optional[AsymptoticsReport] = None,
) -> AsymptoticsReport:
    """Residuals |p'_j(t_end) - 2 target_j| against the sector's eigenvalue assignment.

    Raises:
        SectorError: If the trajectory is not in the expected sector kind
    """
    kind = tr.sector.kind
    if expected_kind is not None and SectorKind(expected_kind) is not kind:
        raise SectorError(f"sorting check for {SectorKind(expected_kind).value} on a {tr.sector.tag} trajectory")
    report = report or _base_report(tr, spec0, threshold)

    _, p_canon = tr.canonical()
    p_end = p_canon[-1]
    targets = 2.0 * eigenvalue_targets(spec0, kind)
    residuals = np.abs(p_end - targets)
    converged = bool(np.max(residuals) < threshold)
    logger.debug(f"sorting residual {np.max(residuals):.3e} at t={tr.times[-1]:g}")
    return replace(
        report,
        momenta=p_end.tolist(),
        momentum_targets=targets.tolist(),
        momentum_residuals=residuals.tolist(),
        sorted_converged=converged,
    )


def default_window(tr: Trajectory) -> Tuple[float, float]:
    """Second half of the recorded time range."""
    t0, t1 = float(tr.times[0]), float(tr.times[-1])
    return (0.5 * (t0 + t1), t1)


def late_window(tr: Trajectory, fraction: float = LATE_FRACTION) -> Tuple[float, float]:
    """Last `fraction` of the time range actually recorded."""
    t0, t1 = float(tr.times[0]), float(tr.times[-1])
    return (t1 - fraction * (t1 - t0), t1)


def scattering_fit(
    tr: Trajectory,
    spec0: Spectrum,
    window: Optional[Tuple[float, float]] = None,
    threshold: float = DEFAULT_THRESHOLD,
    report: Optional[AsymptoticsReport] = None,
) -> AsymptoticsReport:
    """Least-squares slopes of q'_j(t) over a late window, compared with the eigenvalues.

    Raises:
        InsufficientDataError: If the window holds fewer than 10 samples
    """
    window = window or default_window(tr)
    mask = (tr.times >= window[0]) & (tr.times <= window[1])
    count = int(np.count_nonzero(mask))
    if count < MIN_FIT_SAMPLES:
        raise InsufficientDataError(
            f"window [{window[0]:g}, {window[1]:g}] holds {count} samples; need {MIN_FIT_SAMPLES}"
        )
    report = report or _base_report(tr, spec0, threshold)

    q_canon, _ = tr.canonical()
    t = tr.times[mask]
    coeffs = np.polyfit(t, q_canon[mask], 1)
    slopes, intercepts = coeffs[0], coeffs[1]
    fitted = np.outer(t, slopes) + intercepts
    fit_residuals = np.sqrt(np.mean((q_canon[mask] - fitted) ** 2, axis=0))

    targets = eigenvalue_targets(spec0, tr.sector.kind)
    residuals = np.abs(slopes - targets)
    dq, _ = rhs(tr.final.relabeled())
    return replace(
        report,
        window=(float(window[0]), float(window[1])),
        slopes=slopes.tolist(),
        intercepts=intercepts.tolist(),
        slope_targets=targets.tolist(),
        slope_residuals=residuals.tolist(),
        fit_residuals=fit_residuals.tolist(),
        speeds=dq.tolist(),
        scattering_converged=bool(np.max(residuals) < threshold),
    )


def min_gap_series(tr: Trajectory) -> np.ndarray:
    """min_{j != k} |q_j(t) - q_k(t)| per sample (empty for n = 1)."""
    if tr.n == 1:
        return np.empty(0)
    ordered = np.sort(tr.q, axis=1)
    return np.min(np.diff(ordered, axis=1), axis=1)


def separation_check(tr: Trajectory) -> SeparationResult:
    """Minimum-gap series with a flag for growth over the last quartile."""
    gaps = min_gap_series(tr)
    if gaps.size == 0:
        return SeparationResult(times=[], min_gaps=[], separating=True)
    tail = gaps[int(0.75 * gaps.size):]
    increasing = tail.size < 2 or bool(np.all(np.diff(tail) > 0.0))
    return SeparationResult(
        times=tr.times.tolist(),
        min_gaps=gaps.tolist(),
        separating=increasing and bool(gaps[-1] > gaps[0]),
    )


def diagonal_limits(tr: Trajectory) -> np.ndarray:
    """Estimates of alpha_j: the final Lax diagonal p'_j / 2 in canonical order."""
    _, p_canon = tr.canonical()
    return 0.5 * p_canon[-1]


def offdiagonal_mass(tr: Trajectory) -> np.ndarray:
    """Frobenius norm of the off-diagonal part of L(t) per sample."""
    q_canon, p_canon = tr.canonical()
    distance = np.abs(q_canon[:, :, None] - q_canon[:, None, :])
    root_p = np.sqrt(p_canon)
    L = 0.5 * np.exp(-0.5 * distance) * root_p[:, :, None] * root_p[:, None, :]
    n = tr.n
    L[:, np.arange(n), np.arange(n)] = 0.0
    return np.sqrt(np.sum(L ** 2, axis=(1, 2)))


def analyze(
    tr: Trajectory,
    spec0: Spectrum,
    threshold: float = DEFAULT_THRESHOLD,
    window: Optional[Tuple[float, float]] = None,
) -> AsymptoticsReport:
    """Sorting, scattering, separation and diagonal limits in one report."""
    report = sorting_check(tr, spec0, threshold)
    report = scattering_fit(tr, spec0, window, threshold, report=report)
    separation = separation_check(tr)
    gaps = separation.min_gaps
    return replace(
        report,
        min_gap_start=gaps[0] if gaps else None,
        min_gap_end=gaps[-1] if gaps else None,
        separating=separation.separating,
        diagonal_limits=diagonal_limits(tr).tolist(),
    )


# ==========================================================================
# DRIVERS
# ==========================================================================

def asymptotic_config(cfg: IntegratorConfig, max_step: float = 1.0) -> IntegratorConfig:
    """Copy of cfg with the step capped so late windows stay densely sampled."""
    capped = min(cfg.max_step, max_step) if cfg.max_step is not None else max_step
    return cfg.model_copy(update={"max_step": capped, "output_stride": 1})


def spectral_gap(spec0: Spectrum) -> float:
    """Smallest distance between neighbouring eigenvalues, or from the bottom one to zero."""
    lambdas = np.sort(spec0.lambdas)
    return float(min(lambdas[0], np.min(np.diff(lambdas)))) if lambdas.size > 1 else float(lambdas[0])


def horizon_cap(spec0: Spectrum, base_cap: float, scale: float = HORIZON_SCALE) -> float:
    """Extension cap of at least base_cap, growing like 1 / spectral_gap.

    Convergence rates shrink with the smallest gap, so a fixed horizon that
    suits n = 3 is far too short for n = 5 in S_minus.
    """
    return max(float(base_cap), scale / spectral_gap(spec0))


def integrate_until_converged(
    s0: PeakonState,
    cfg: IntegratorConfig,
    threshold: float = DEFAULT_THRESHOLD,
    cap: float = 400.0,
    spec0: Optional[Spectrum] = None,
    require_scattering: bool = False,
):
    """Integrate, doubling t_end until the convergence flags hold or the cap is reached.

    Each extension continues from the last state, so the combined trajectory
    is the same as one long run. With require_scattering the slope fit over
    the last quarter of the horizon reached must converge as well.

    Returns:
        (trajectory, report); report.extended and report.cap_reached
        record what happened
    """
    spec0 = spec0 or eigendecompose(lax_from_state(s0))

    def check(tr: Trajectory) -> AsymptoticsReport:
        report = sorting_check(tr, spec0, threshold)
        if require_scattering:
            try:
                report = scattering_fit(tr, spec0, late_window(tr), threshold, report=report)
            except InsufficientDataError as e:
                logger.debug(f"slope fit skipped at t={tr.times[-1]:g}: {e}")
                report = replace(report, scattering_converged=False)
        return report

    t_end = min(cfg.t_end, cap)
    tr = integrate(s0, cfg.model_copy(update={"t_end": t_end}))
    report = check(tr)
    extended = False

    while not report.converged and t_end < cap:
        next_end = min(2.0 * t_end, cap)
        logger.info(
            f"sorting residual {report.max_momentum_residual:.3e}"
            + (f", slope residual {report.max_slope_residual:.3e}" if require_scattering else "")
            + f" at t={t_end:g} (threshold {threshold:g}); extending to t={next_end:g}"
        )
        t_last = float(tr.times[-1])
        continuation = integrate(tr.final, cfg.model_copy(update={"t_end": next_end - t_last}), t0=t_last)
        tr = tr.extended(continuation)
        t_end = next_end
        extended = True
        report = check(tr)

    cap_reached = not report.converged and t_end >= cap
    if cap_reached:
        logger.warning(f"no convergence by the cap t={cap:g} (residual {report.max_momentum_residual:.3e})")
    return tr, replace(report, extended=extended, cap_reached=cap_reached)


def permuted_sector_run(
    s0: PeakonState,
    cfg: IntegratorConfig,
    threshold: float = DEFAULT_THRESHOLD,
    window: Optional[Tuple[float, float]] = None,
    cap: Optional[float] = None,
) -> AsymptoticsReport:
    """Integrate the original-index system of a permuted state and check relabeled limits.

    In original indices this is p_i -> 2 lambda_{pi^{-1}(i)} for S_plus, which
    is the canonical statement p'_j -> 2 lambda_j after relabeling. With a
    cap the run goes through integrate_until_converged (cap raised by
    horizon_cap) and, unless a window is given, the slopes are fitted over
    the last quarter of the horizon reached.
    """
    spec0 = eigendecompose(lax_from_state(s0))
    cfg = asymptotic_config(cfg)
    if cap is None:
        return analyze(integrate(s0, cfg), spec0, threshold, window)
    tr, driven = integrate_until_converged(
        s0, cfg, threshold, horizon_cap(spec0, cap), spec0, require_scattering=True
    )
    report = analyze(tr, spec0, threshold, window or late_window(tr))
    return replace(report, extended=driven.extended, cap_reached=driven.cap_reached)


def permutation_equivariance(s0: PeakonState, cfg: IntegratorConfig) -> float:
    """Max difference between integrating-then-relabeling and relabeling-then-integrating."""
    direct = integrate(s0, cfg)
    relabeled = integrate(s0.relabeled(), cfg)
    q_canon, p_canon = direct.canonical()
    if relabeled.times.shape != direct.times.shape or np.any(relabeled.times != direct.times):
        # step sequences diverged; compare final states only
        return float(max(np.max(np.abs(q_canon[-1] - relabeled.q[-1])),
                         np.max(np.abs(p_canon[-1] - relabeled.p[-1]))))
    return float(max(np.max(np.abs(q_canon - relabeled.q)), np.max(np.abs(p_canon - relabeled.p))))


# ==========================================================================
# TRENDS ACROSS TRUNCATION SIZES
# ==========================================================================

@dataclass
class TrendTable:
    """Per-n leading slope and momentum plateau of S_minus runs."""
    frame: pd.DataFrame
    slope_decreasing: bool
    plateau_decreasing: bool

    def to_dict(self) -> Dict:
        return {
            "rows": self.frame.to_dict(orient="records"),
            "slope_decreasing": self.slope_decreasing,
            "plateau_decreasing": self.plateau_decreasing,
        }


def sublinear_trend(reports: List[AsymptoticsReport]) -> TrendTable:
    """Slope of q'_1 and plateau of p'_1 across runs of increasing n.

    At finite truncation the slope of the leftmost particle tends to the
    smallest eigenvalue, which shrinks as n grows; both columns are checked
    for strict decrease.

    Raises:
        InsufficientDataError: With fewer than 3 runs
    """
    if len(reports) < MIN_TREND_RUNS:
        raise InsufficientDataError(f"fewer than {MIN_TREND_RUNS} runs ({len(reports)} given)")
    rows = []
    for report in reports:
        if not report.slopes or not report.momenta:
            raise InsufficientDataError(f"run with n={report.n} has no slope fit or momentum data")
        rows.append({
            "n": report.n,
            "slope_q1": report.slopes[0],
            "p1_plateau": report.momenta[0],
            "lambda_min": min(report.lambdas),
        })
    df = pd.DataFrame(rows).sort_values("n").reset_index(drop=True)
    df["slope_change"] = df["slope_q1"].pct_change()
    df["plateau_change"] = df["p1_plateau"].pct_change()
    return TrendTable(
        frame=df,
        slope_decreasing=bool(np.all(np.diff(df["slope_q1"].to_numpy()) < 0.0)),
        plateau_decreasing=bool(np.all(np.diff(df["p1_plateau"].to_numpy()) < 0.0)),
    )
