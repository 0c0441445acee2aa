"""
Verification Suites

Named groups of acceptance checks run by `verify`. Every check compares one
measured number with a threshold and yields a CriterionResult; a suite
passes when all of its criteria pass. Random inputs come from
numpy.random.default_rng seeded with (seed, suite index, item index).
"""

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .algebra import (
    ad_pairing,
    dual_project_lower,
    dual_project_skew,
    hamiltonian_hierarchy,
    hierarchy_gradient,
    hs_inner,
    lie_poisson_bracket,
    mybe_residual,
    project_lower,
    project_skew,
)
from .asymptotics import (
    analyze,
    asymptotic_config,
    horizon_cap,
    integrate_until_converged,
    late_window,
    permutation_equivariance,
    permuted_sector_run,
    scattering_fit,
    sublinear_trend,
)
from .errors import ConfigError, PeakonError
from .factorization import factorize
from .flows import (
    apriori_bounds_check,
    conserved_report,
    hierarchy_rhs,
    integrate,
    lax_velocity_residual,
    rhs,
    route_discrepancy,
    toda_solve,
)
from .models import GridSpec, IntegratorConfig
from .semiseparable import (
    coadjoint_action,
    is_semiseparable,
    lax_from_state,
    leading_minor_dets,
    recurrence_residual,
    tridiagonal_inverse,
)
from .spectral import (
    compound_evolution_check,
    diagonal_sum_identity,
    eigendecompose,
    first_component_evolution,
    leading_projection,
    ratio_law_residual,
)
from .states import (
    S_MINUS,
    S_PLUS,
    FlowSign,
    PeakonState,
    Sector,
    SectorKind,
    geometric_state,
    random_state,
)
from .wavefield import asymptotic_residual, emit_grid

logger = logging.getLogger(__name__)

EPS = float(np.finfo(float).eps)


# ==========================================================================
# RESULT TYPES
# ==========================================================================

@dataclass
class CriterionResult:
    """Outcome of one measured quantity against its threshold."""
    suite: str
    name: str
    value: float
    threshold: float
    comparison: str = "<="
    details: Dict = field(default_factory=dict)
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        if self.error is not None or not math.isfinite(self.value):
            return False
        if self.comparison == ">=":
            return self.value >= self.threshold
        return self.value <= self.threshold

    def to_dict(self) -> Dict:
        data = asdict(self)
        data["passed"] = self.passed
        return data


@dataclass
class VerificationReport:
    """All criteria of one verify run."""
    seed: int
    suites: List[str]
    results: List[CriterionResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.results) and all(r.passed for r in self.results)

    @property
    def failures(self) -> List[CriterionResult]:
        return [r for r in self.results if not r.passed]

    def suite_passed(self, suite: str) -> bool:
        return all(r.passed for r in self.results if r.suite == suite)

    def to_dict(self) -> Dict:
        return {
            "seed": self.seed,
            "suites": {name: self.suite_passed(name) for name in self.suites},
            "passed": self.passed,
            "criteria": [r.to_dict() for r in self.results],
        }


@dataclass
class VerifyOptions:
    """Knobs shared by the suites."""
    seed: int = 0
    n: Optional[int] = None
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    dt_max: float = 0.5
    cap: float = 400.0
    threshold: float = 1e-3

    def integrator(self, t_end: float, **updates) -> IntegratorConfig:
        return IntegratorConfig(rel_tol=self.rel_tol, abs_tol=self.abs_tol, t_end=t_end, **updates)

    def rng(self, *keys: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, *keys])


# ==========================================================================
# SHARED FIXTURES
# ==========================================================================

ANALYTIC_N2_MINUS = PeakonState([-1.0, 1.0], [1.0, 1.0], S_MINUS)
ANALYTIC_N2_PLUS = PeakonState([1.0, -1.0], [1.0, 1.0], S_PLUS)


@lru_cache(maxsize=8)
def _dual_route_runs(seed: int, rel_tol: float, abs_tol: float, dt_max: float) -> Tuple[Dict, ...]:
    """Seeded random states per sector and n in {2, 4, 6}, run to t = 10 by both routes."""
    options = VerifyOptions(seed=seed, rel_tol=rel_tol, abs_tol=abs_tol, dt_max=dt_max)
    cfg = options.integrator(10.0)
    runs = []
    for sector_index, sector in enumerate((S_MINUS, S_PLUS)):
        for n in (2, 4, 6):
            for item in range(10):
                s0 = random_state(n, options.rng(1, sector_index, n, item), sector=sector)
                tr = integrate(s0, cfg)
                result = route_discrepancy(s0, cfg, dt_max, trajectory=tr)
                result.update({"sector": sector.tag, "n": n, "item": item, "trajectory": tr})
                runs.append(result)
    return tuple(runs)


# ==========================================================================
# VERIFIER
# ==========================================================================

class CriteriaVerifier:
    """Runs named suites and collects CriterionResults."""

    def __init__(self, options: Optional[VerifyOptions] = None):
        self.options = options or VerifyOptions()
        self.suites: Dict[str, Callable[[], List[CriterionResult]]] = {
            "mybe": self.check_mybe,
            "splitting": self.check_splitting,
            "adjointness": self.check_adjointness,
            "hierarchy": self.check_hierarchy,
            "coadjoint": self.check_coadjoint,
            "route": self.check_route,
            "isospectral": self.check_isospectral,
            "conservation": self.check_conservation,
            "tridiagonal": self.check_tridiagonal,
            "determinant": self.check_determinant,
            "first_component": self.check_first_component,
            "compound": self.check_compound,
            "sorting": self.check_sorting,
            "scattering": self.check_scattering,
            "sminus": self.check_sminus,
            "permutation": self.check_permutation,
            "wavefield": self.check_wavefield,
        }

    @property
    def names(self) -> List[str]:
        return list(self.suites)

    def resolve(self, names: Sequence[str]) -> List[str]:
        """Expand 'all' and reject unknown suite names."""
        if not names or "all" in names:
            return self.names
        unknown = [name for name in names if name not in self.suites]
        if unknown:
            raise ConfigError(
                f"suite: unknown suite(s) {', '.join(unknown)}; choose from {', '.join(self.names)}",
                field="suite",
            )
        return list(dict.fromkeys(names))

    def run(self, names: Sequence[str]) -> VerificationReport:
        selected = self.resolve(names)
        report = VerificationReport(seed=self.options.seed, suites=selected)
        for name in selected:
            logger.info(f"Running suite '{name}'")
            try:
                results = self.suites[name]()
            except PeakonError as e:
                logger.error(f"Suite '{name}' raised {type(e).__name__}: {e}")
                results = [CriterionResult(name, "suite_completed", math.nan, 0.0, error=str(e),
                                           details=e.to_dict())]
            for result in results:
                status = "PASS" if result.passed else "FAIL"
                logger.info(
                    f"  [{status}] {result.suite}.{result.name}: {result.value:.3e} "
                    f"{result.comparison} {result.threshold:.1e}"
                )
            report.results.extend(results)
        return report

    # ----------------------------------------------------------------------
    # algebra
    # ----------------------------------------------------------------------

    def check_mybe(self) -> List[CriterionResult]:
        worst = 0.0
        for item in range(10):
            rng = self.options.rng(2, item)
            n = int(rng.integers(2, 8))
            A, B = rng.standard_normal((n, n)), rng.standard_normal((n, n))
            worst = max(worst, float(np.max(np.abs(mybe_residual(A, B)))))
        return [CriterionResult("mybe", "mybe_residual", worst, 1e-12)]

    def check_splitting(self) -> List[CriterionResult]:
        worst_sum = worst_range = 0.0
        for item in range(10):
            rng = self.options.rng(3, item)
            n = int(rng.integers(2, 8))
            A = rng.standard_normal((n, n))
            K, Lo = project_skew(A), project_lower(A)
            scale = float(np.max(np.abs(A)))
            worst_sum = max(worst_sum, float(np.max(np.abs(K + Lo - A))) / scale)
            # images: skew and lower triangular, projections idempotent
            worst_range = max(
                worst_range,
                float(np.max(np.abs(K + K.T))),
                float(np.max(np.abs(np.triu(Lo, 1)))),
                float(np.max(np.abs(project_skew(K) - K))),
                float(np.max(np.abs(project_lower(Lo) - Lo))),
            )
        return [
            CriterionResult("splitting", "sum_reproduces_input", worst_sum, 4 * EPS),
            CriterionResult("splitting", "image_and_idempotence", worst_range, 0.0),
        ]

    def check_adjointness(self) -> List[CriterionResult]:
        worst = symmetric = 0.0
        for item in range(10):
            rng = self.options.rng(4, item)
            n = int(rng.integers(2, 8))
            A, L = rng.standard_normal((n, n)), rng.standard_normal((n, n))
            worst = max(
                worst,
                abs(ad_pairing(project_skew(A), L) - ad_pairing(A, dual_project_skew(L))),
                abs(ad_pairing(project_lower(A), L) - ad_pairing(A, dual_project_lower(L))),
            )
            # on symmetric matrices the ad pairing is the Hilbert-Schmidt product
            S = L + L.T
            symmetric = max(symmetric, abs(ad_pairing(A, S) - hs_inner(A, S)))
        return [
            CriterionResult("adjointness", "dual_pairing", worst, 1e-12),
            CriterionResult("adjointness", "symmetric_pairing", symmetric, 1e-12),
        ]

    def check_hierarchy(self) -> List[CriterionResult]:
        bracket = velocity = trace_rate = 0.0
        for item in range(6):
            rng = self.options.rng(5, item)
            sector = (S_MINUS, S_PLUS)[item % 2]
            s = random_state(int(rng.integers(2, 7)), rng, sector=sector)
            L = lax_from_state(s).matrix
            for i in (1, 2, 3):
                for j in (1, 2, 3):
                    value = lie_poisson_bracket(hierarchy_gradient(L, i), hierarchy_gradient(L, j), L)
                    bracket = max(bracket, abs(value))
            velocity = max(velocity, lax_velocity_residual(s))
            for j in (1, 2):
                field_j = hierarchy_rhs(L, j, sector.flow_sign)
                for m in (1, 2, 3):
                    # d/dt H_m = tr(L^m dL/dt) / 2 along the j-th flow
                    rate = 0.5 * float(np.trace(np.linalg.matrix_power(L, m) @ field_j))
                    trace_rate = max(trace_rate, abs(rate) / max(1.0, abs(hamiltonian_hierarchy(L, m))))
        return [
            CriterionResult("hierarchy", "bracket_vanishing", bracket, 1e-12),
            CriterionResult("hierarchy", "lax_velocity_residual", velocity, 1e-12),
            CriterionResult("hierarchy", "hamiltonian_rates", trace_rate, 1e-12),
        ]

    def check_coadjoint(self) -> List[CriterionResult]:
        failures = 0
        for item in range(10):
            rng = self.options.rng(6, item)
            n = int(rng.integers(3, 8))
            s = random_state(n, rng, sector=S_MINUS)
            G = np.eye(n) + 0.2 * rng.standard_normal((n, n))
            result = coadjoint_action(factorize(G), lax_from_state(s).matrix)
            if not is_semiseparable(result, tol=1e-9):
                failures += 1
        return [CriterionResult("coadjoint", "semiseparable_orbits", float(failures), 0.0,
                                details={"trials": 10})]

    # ----------------------------------------------------------------------
    # routes and conservation
    # ----------------------------------------------------------------------

    def _runs(self) -> Tuple[Dict, ...]:
        o = self.options
        return _dual_route_runs(o.seed, o.rel_tol, o.abs_tol, o.dt_max)

    def check_route(self) -> List[CriterionResult]:
        runs = self._runs()
        worst = max(runs, key=lambda r: r["max_discrepancy"])
        return [CriterionResult(
            "route", "route_equivalence", worst["max_discrepancy"], 1e-5,
            details={"runs": len(runs), "worst": {k: worst[k] for k in ("sector", "n", "item")}},
        )]

    def check_isospectral(self) -> List[CriterionResult]:
        runs = self._runs()
        return [
            CriterionResult("isospectral", "factorization_drift",
                            max(r["factorization_spectral_drift"] for r in runs), 1e-9),
            CriterionResult("isospectral", "ode_drift",
                            max(r["ode_spectral_drift"] for r in runs), 1e-6,
                            details={"rel_tol": self.options.rel_tol}),
        ]

    def check_conservation(self) -> List[CriterionResult]:
        rel_tol = self.options.rel_tol
        p_drift = h_drift = dp_sum = 0.0
        bounds_ok = True
        for run in self._runs():
            tr = run["trajectory"]
            drift = conserved_report(tr).drift
            p_drift = max(p_drift, drift["P"])
            h_drift = max(h_drift, drift["H"])
            check = apriori_bounds_check(tr)
            bounds_ok = bounds_ok and check["position_ok"] and check["momentum_ok"]
            for state in (tr.initial, tr.final):
                _, dp = rhs(state)
                scale = float(np.sum(np.abs(dp)))
                if scale > 0.0:
                    dp_sum = max(dp_sum, abs(float(np.sum(dp))) / (EPS * scale))
        return [
            CriterionResult("conservation", "momentum_drift", p_drift, 10 * rel_tol),
            CriterionResult("conservation", "energy_drift", h_drift, 100 * rel_tol),
            CriterionResult("conservation", "force_balance_ulps", dp_sum, 16.0),
            CriterionResult("conservation", "apriori_bounds", 0.0 if bounds_ok else 1.0, 0.0),
        ]

    # ----------------------------------------------------------------------
    # semiseparable structure
    # ----------------------------------------------------------------------

    def _structure_states(self, suite_index: int, count: int = 20) -> List[PeakonState]:
        states = []
        for item in range(count):
            rng = self.options.rng(suite_index, item)
            n = int(rng.integers(1, 9))
            states.append(random_state(n, rng, sector=S_MINUS, gap_range=(0.1, 2.0)))
        return states

    def check_tridiagonal(self) -> List[CriterionResult]:
        inverse = recurrence = 0.0
        for s in self._structure_states(7):
            lax = lax_from_state(s)
            inverse = max(inverse, tridiagonal_inverse(s).inverse_residual(lax.matrix))
            if s.n > 1:
                recurrence = max(recurrence, recurrence_residual(s, eigendecompose(lax)))
        J = tridiagonal_inverse(ANALYTIC_N2_MINUS)
        a_exact = 2.0 / (1.0 - math.exp(-2.0))
        b_exact = 2.0 * math.exp(-1.0) / (1.0 - math.exp(-2.0))
        analytic = max(abs(J.a[0] - a_exact), abs(J.a[1] - a_exact), abs(J.b[0] - b_exact))
        return [
            CriterionResult("tridiagonal", "inverse_residual", inverse, 1e-9),
            CriterionResult("tridiagonal", "recurrence_residual", recurrence, 1e-9),
            CriterionResult("tridiagonal", "analytic_n2_entries", analytic, 1e-12),
        ]

    def check_determinant(self) -> List[CriterionResult]:
        worst = 0.0
        for s in self._structure_states(8):
            lax = lax_from_state(s)
            formula = leading_minor_dets(lax)
            lu = np.array([np.linalg.det(lax.matrix[:k, :k]) for k in range(1, s.n + 1)])
            worst = max(worst, float(np.max(np.abs(formula - lu) / np.abs(lu))))
        det2 = leading_minor_dets(lax_from_state(ANALYTIC_N2_MINUS))[-1]
        return [
            CriterionResult("determinant", "product_formula_vs_lu", worst, 1e-10),
            CriterionResult("determinant", "analytic_n2", abs(det2 - (1.0 - math.exp(-2.0)) / 4.0), 1e-15),
        ]

    # ----------------------------------------------------------------------
    # spectral evolution
    # ----------------------------------------------------------------------

    def check_first_component(self) -> List[CriterionResult]:
        s0 = geometric_state(5, C=2.0, r=0.6, d=1.0, sector=S_MINUS)
        L0 = lax_from_state(s0)
        spec0 = eigendecompose(L0)
        worst = ratio = 0.0
        for t in (1.0, 2.0, 5.0, 10.0):
            closed = first_component_evolution(spec0, t)
            observed = eigendecompose(toda_solve(L0.matrix, t, FlowSign.MINUS, self.options.dt_max)).Phi[0]
            worst = max(worst, float(np.max(np.abs(closed - observed))))
            ratio = max(ratio, ratio_law_residual(spec0, t, 1, 5, self.options.dt_max))
        return [
            CriterionResult("first_component", "closed_form_vs_factorization", worst, 1e-8),
            CriterionResult("first_component", "ratio_law", ratio, 1e-8),
        ]

    def check_compound(self) -> List[CriterionResult]:
        s0 = geometric_state(5, C=2.0, r=0.6, d=1.0, sector=S_PLUS)
        spec0 = eigendecompose(lax_from_state(s0))
        worst = diagonal = 0.0
        for k in (1, 2, 3):
            for t in (1.0, 3.0):
                worst = max(worst, compound_evolution_check(spec0, t, k, self.options.dt_max))
                L_t = toda_solve(spec0.reconstruct(), t, FlowSign.PLUS, self.options.dt_max)
                diagonal = max(diagonal, diagonal_sum_identity(L_t, eigendecompose(L_t), k))

        # well-separated spectrum for the long-time indicator
        separated = geometric_state(5, C=16.0, r=0.5, d=6.0, sector=S_PLUS)
        L_sep = lax_from_state(separated).matrix
        L_40 = toda_solve(L_sep, 40.0, FlowSign.PLUS, self.options.dt_max)
        spec_40 = eigendecompose(L_40)
        indicator = min(leading_projection(spec_40, k) for k in (1, 2, 3))
        return [
            CriterionResult("compound", "closed_form_vs_factorization", worst, 1e-8),
            CriterionResult("compound", "diagonal_sum_identity", diagonal, 1e-10),
            CriterionResult("compound", "leading_limit_indicator", indicator, 1.0 - 1e-6, comparison=">="),
        ]

    # ----------------------------------------------------------------------
    # long-time asymptotics
    # ----------------------------------------------------------------------

    def _geometric(self, sector: Sector, n: Optional[int] = None) -> PeakonState:
        return geometric_state(n or self.options.n or 4, C=1.0, r=0.6, d=1.0, sector=sector)

    def check_sorting(self) -> List[CriterionResult]:
        o = self.options
        cfg = asymptotic_config(o.integrator(50.0))
        s0 = self._geometric(S_PLUS)
        _, report = integrate_until_converged(s0, cfg, o.threshold, o.cap)

        tr2 = integrate(ANALYTIC_N2_PLUS, o.integrator(100.0))
        expected = np.array([1.0 + math.exp(-1.0), 1.0 - math.exp(-1.0)])
        analytic = float(np.max(np.abs(tr2.final.p - expected)))
        return [
            CriterionResult("sorting", f"momentum_limits_n{s0.n}", report.max_momentum_residual, o.threshold,
                            details={"t_end": report.t_end, "extended": report.extended,
                                     "residuals": report.momentum_residuals}),
            CriterionResult("sorting", "analytic_n2", analytic, 1e-4),
        ]

    def check_scattering(self) -> List[CriterionResult]:
        o = self.options
        s0 = self._geometric(S_PLUS)
        spec0 = eigendecompose(lax_from_state(s0))
        tr = integrate(s0, asymptotic_config(o.integrator(o.cap)))
        window = (0.75 * o.cap, o.cap)
        report = scattering_fit(tr, spec0, window, o.threshold)
        return [CriterionResult("scattering", f"slope_fit_n{s0.n}", report.max_slope_residual, o.threshold,
                                details={"window": list(window), "slopes": report.slopes,
                                         "targets": report.slope_targets})]

    def check_sminus(self) -> List[CriterionResult]:
        o = self.options
        cfg = asymptotic_config(o.integrator(100.0))
        reports = []
        for n in (3, 4, 5):
            s0 = self._geometric(S_MINUS, n)
            spec0 = eigendecompose(lax_from_state(s0))
            tr, driven = integrate_until_converged(
                s0, cfg, o.threshold, horizon_cap(spec0, o.cap), spec0, require_scattering=True
            )
            report = analyze(tr, spec0, o.threshold, window=late_window(tr))
            reports.append(replace(report, extended=driven.extended, cap_reached=driven.cap_reached))
        limits = max(max(r.max_momentum_residual, r.max_slope_residual) for r in reports)
        trend = sublinear_trend(reports)
        return [
            CriterionResult("sminus", "reversed_assignment", limits, o.threshold,
                            details={"t_end": {f"n{r.n}": r.t_end for r in reports}}),
            CriterionResult("sminus", "sublinear_trend", 0.0 if trend.slope_decreasing and trend.plateau_decreasing
                            else 1.0, 0.0, details=trend.to_dict()),
        ]

    def check_permutation(self) -> List[CriterionResult]:
        o = self.options
        permuted = geometric_state(2, C=1.0, r=0.6, d=2.0, sector=Sector(SectorKind.S_PLUS, (2, 1)))
        report = permuted_sector_run(permuted, o.integrator(100.0), o.threshold, cap=o.cap)
        equivariance = permutation_equivariance(
            geometric_state(3, C=1.0, r=0.6, d=1.0, sector=Sector(SectorKind.S_MINUS, (3, 1, 2))),
            o.integrator(10.0),
        )
        return [
            CriterionResult("permutation", "relabeled_limits", report.max_momentum_residual, o.threshold,
                            details={"targets": report.momentum_targets, "sector": report.sector}),
            CriterionResult("permutation", "relabeled_slopes", report.max_slope_residual, o.threshold,
                            details={"window": report.window, "t_end": report.t_end}),
            CriterionResult("permutation", "equivariance", equivariance, 1e-8),
        ]

    def check_wavefield(self) -> List[CriterionResult]:
        o = self.options
        tr = integrate(ANALYTIC_N2_PLUS, o.integrator(100.0))
        spec0 = eigendecompose(lax_from_state(ANALYTIC_N2_PLUS))
        q = tr.final.q
        grid = GridSpec(x_min=float(q.min()) - 20.0, x_max=float(q.max()) + 20.0, count=4001)
        profile = asymptotic_residual(tr.final, spec0, 100.0, grid)

        c = 0.75
        single = PeakonState([0.0], [2.0 * c], S_PLUS)
        tr1 = integrate(single, o.integrator(10.0))
        grid1 = GridSpec(x_min=-10.0, x_max=20.0, count=3001)
        times = [0.0, 2.5, 5.0, 10.0]
        wave = emit_grid(tr1, grid1, times)
        exact = c * np.exp(-np.abs(wave.x[None, :] - c * np.asarray(times)[:, None]))
        single_error = float(np.max(np.abs(wave.values - exact)))
        return [
            CriterionResult("wavefield", "profile_residual_n2_t100", profile.residual, 2e-3,
                            details=profile.to_dict()),
            CriterionResult("wavefield", "single_peakon_exact", single_error, 1e-12),
        ]
