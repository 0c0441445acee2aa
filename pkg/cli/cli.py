"""
Peakon Toda - CLI Application

Runs peakon simulations through the ODE route and the factorization route,
writes trajectories, spectra, wave profiles and asymptotics reports, and
runs the verification suites.

Usage:
    python -m cli.cli simulate --config run.json
    python -m cli.cli simulate --n 2 --sector S_plus --q 1 -1 --p 1 1 --t-end 10 --solver both
    python -m cli.cli spectrum --n 2 --q -1 1 --p 1 1
    python -m cli.cli verify --suite mybe --suite sorting --n 4
    python -m cli.cli wavefield --config run.json --trajectory results/trajectory.csv
    python -m cli.cli asymptotics --config run.json --auto-extend
    python -m cli.cli sweep --config run.json --ns 3 4 5

Exit codes: 0 success, 1 verification failure, 2 config error, 3 numerical failure.
"""

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from dotenv import load_dotenv

from peakon_toda.asymptotics import (
    AsymptoticsReport,
    analyze,
    asymptotic_config,
    integrate_until_converged,
    sublinear_trend,
)
from peakon_toda.errors import ConfigError, NumericalError, PeakonError
from peakon_toda.flows import (
    conserved_report,
    integrate,
    lax_to_state,
    route_discrepancy,
    toda_solve,
)
from peakon_toda.models import (
    GridSpec,
    RunConfig,
    RuntimeSettings,
    apply_overrides,
    build_config,
    build_state,
    config_echo,
    load_config,
)
from peakon_toda.report_generator import MarkdownReportGenerator
from peakon_toda.semiseparable import lax_from_state
from peakon_toda.serialization import (
    RunManifest,
    dumps,
    factorization_frame,
    read_trajectory_csv,
    trajectory_frame,
    write_json,
)
from peakon_toda.services import short_fingerprint
from peakon_toda.spectral import eigendecompose
from peakon_toda.states import tail_bound
from peakon_toda.verification import CriteriaVerifier, VerifyOptions
from peakon_toda.wavefield import asymptotic_residual, emit_grid

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


# ==========================================================================
# CONFIG FROM FILE + FLAGS
# ==========================================================================

def _set(target: Dict[str, Any], path: str, value: Any) -> None:
    keys = path.split(".")
    for key in keys[:-1]:
        target = target.setdefault(key, {})
    target[keys[-1]] = value


def collect_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Nested config overrides from the flags that were actually given."""
    overrides: Dict[str, Any] = {"command": args.command}
    mapping = {
        "n": "n",
        "sector": "sector.tag",
        "permutation": "sector.permutation",
        "seed": "seed",
        "solver": "solver",
        "dt_max": "dt_max",
        "output_dir": "output_dir",
        "t_end": "integrator.t_end",
        "rel_tol": "integrator.rel_tol",
        "abs_tol": "integrator.abs_tol",
        "max_step": "integrator.max_step",
        "output_stride": "integrator.output_stride",
        "threshold": "threshold",
        "t_cap": "t_cap",
        "times": "times",
        "C": "initial.C",
        "r": "initial.r",
        "d": "initial.d",
    }
    for attr, path in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            _set(overrides, path, value)

    if getattr(args, "dense_output", False):
        _set(overrides, "integrator.dense_output", True)
    if getattr(args, "auto_extend", False):
        _set(overrides, "auto_extend", True)
    if getattr(args, "q", None) is not None or getattr(args, "p", None) is not None:
        _set(overrides, "initial.q", args.q)
        _set(overrides, "initial.p", args.p)
        _set(overrides, "initial.generator", None)
    if getattr(args, "generator", None) is not None:
        _set(overrides, "initial.generator", args.generator)
        _set(overrides, "initial.q", None)
        _set(overrides, "initial.p", None)

    grid = {k: getattr(args, k, None) for k in ("x_min", "x_max", "count")}
    if any(v is not None for v in grid.values()):
        overrides["grid"] = {k: v for k, v in grid.items() if v is not None}
    return overrides


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Load --config (if any) and apply flag overrides.

    Raises:
        ConfigError: On a missing file or failed validation
    """
    overrides = collect_overrides(args)
    if args.config:
        cfg = apply_overrides(load_config(args.config), overrides)
    else:
        cfg = build_config({}, overrides)
    args.output_dir = cfg.output_dir
    digest = short_fingerprint(dumps(config_echo(cfg)).encode("utf-8"))
    logger.info(f"Config {digest}: command={cfg.command} n={cfg.n} sector={cfg.sector.tag} solver={cfg.solver}")
    return cfg


def _manifest(cfg: RunConfig, command: str) -> RunManifest:
    manifest = RunManifest(command=command, output_dir=Path(cfg.output_dir), config=config_echo(cfg))
    init = cfg.initial
    manifest.metadata["tail_bound"] = tail_bound(init.C, init.r, cfg.n) if init.generator == "geometric" else None
    return manifest


def _banner(title: str) -> None:
    print(f"\n{'=' * 70}")
    print(title)
    print(f"{'=' * 70}")


# ==========================================================================
# COMMANDS
# ==========================================================================

def cmd_simulate(args: argparse.Namespace) -> int:
    """Integrate one run and write trajectory, ledger and manifest."""
    cfg = resolve_config(args)
    s0 = build_state(cfg)
    manifest = _manifest(cfg, "simulate")
    _banner(f"SIMULATE  n={cfg.n}  sector={s0.sector.tag}  t_end={cfg.t_end:g}  solver={cfg.solver}")

    if cfg.solver in ("ode", "both"):
        print("📈 Integrating the peakon equations...")
        tr = integrate(s0, cfg.integrator)
        manifest.write_csv(trajectory_frame(tr), "trajectory.csv", "trajectory")
        manifest.write_csv(tr.ledger, "ledger.csv", "ledger")
        report = conserved_report(tr)
        manifest.metadata["diagnostics"] = tr.diagnostics.to_dict()
        manifest.metadata["conserved_drift"] = report.drift
        print(f"   ✅ {tr.diagnostics.accepted} accepted steps, {len(tr)} samples")
        print(f"   P drift {report.drift['P']:.3e}, H drift {report.drift['H']:.3e}")

        if cfg.solver == "both":
            print("🔁 Cross-checking against the factorization route...")
            discrepancy = route_discrepancy(s0, cfg.integrator, cfg.dt_max, trajectory=tr)
            manifest.metadata["route_equivalence"] = discrepancy
            print(f"   max |L_ode - L_factorization| = {discrepancy['max_discrepancy']:.3e}")

    if cfg.solver == "factorization":
        print("🧮 Solving the Toda flow by factorization...")
        times = sorted(set(cfg.times or np.linspace(0.0, cfg.t_end, 11).tolist()) | {0.0})
        L = lax_from_state(s0).matrix
        q_ref = float(s0.relabeled().q[0])
        states, previous = [], 0.0
        for t in times:
            L = toda_solve(L, t - previous, s0.sector.flow_sign, cfg.dt_max)
            states.append(lax_to_state(L, q_ref, s0.sector))
            previous = t
        manifest.write_csv(factorization_frame(times, states), "factorization.csv", "factorization")
        print(f"   ✅ {len(times)} time points")

    path = manifest.save()
    print(f"\n📁 Manifest: {path}\n")
    return EXIT_OK


def cmd_spectrum(args: argparse.Namespace) -> int:
    """Eigendecompose the Lax matrix of the initial state."""
    cfg = resolve_config(args)
    s0 = build_state(cfg)
    spec = eigendecompose(lax_from_state(s0))
    manifest = _manifest(cfg, "spectrum")
    data = {
        "n": spec.n,
        "sector": s0.sector.to_dict(),
        "lambdas": spec.lambdas.tolist(),
        "phi_first_row": spec.first_row.tolist(),
        "residual": spec.residual,
    }
    manifest.write_json(data, "spectrum.json", "spectrum")
    manifest.save()

    _banner(f"SPECTRUM  n={spec.n}  sector={s0.sector.tag}")
    for k, (lam, phi) in enumerate(zip(spec.lambdas, spec.first_row), 1):
        print(f"  lambda_{k} = {lam:.10f}   phi_{k}(1) = {phi:.10f}")
    print(f"  residual = {spec.residual:.3e}\n")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    """Run the selected suites; exit 1 when any criterion fails."""
    options = VerifyOptions(seed=args.seed or 0, n=args.n)
    if args.rel_tol is not None:
        options.rel_tol = args.rel_tol
    verifier = CriteriaVerifier(options)
    suites = verifier.resolve(args.suite or ["all"])

    _banner(f"VERIFY  suites={', '.join(suites)}  seed={options.seed}")
    report = verifier.run(suites)

    out = Path(args.output_dir or "results")
    manifest = RunManifest(command="verify", output_dir=out, config={
        "seed": options.seed, "n": options.n, "rel_tol": options.rel_tol, "suites": suites,
    })
    manifest.write_json(report.to_dict(), "verify.json", "verification")
    if args.markdown:
        markdown = MarkdownReportGenerator("Verification Summary").generate_full_report(verification=report)
        md_path = Path(args.markdown)
        md_path.parent.mkdir(parents=True, exist_ok=True)
        md_path.write_text(markdown, encoding="utf-8")
        manifest.add(md_path, "markdown")
    manifest.save()

    for r in report.results:
        mark = "✅" if r.passed else "❌"
        print(f"{mark} {r.suite}.{r.name}: {r.value:.3e} {r.comparison} {r.threshold:.1e}")
    print(f"\n{'✅ All criteria passed' if report.passed else f'❌ {len(report.failures)} criterion(s) failed'}\n")
    return EXIT_OK if report.passed else EXIT_VERIFICATION


def _load_or_integrate(args: argparse.Namespace, cfg: RunConfig):
    if args.trajectory:
        return read_trajectory_csv(args.trajectory, cfg.sector.build())
    return integrate(build_state(cfg), cfg.integrator)


def cmd_wavefield(args: argparse.Namespace) -> int:
    """Sample u(x, t) of a run on a grid."""
    cfg = resolve_config(args)
    tr = _load_or_integrate(args, cfg)
    grid = cfg.grid or GridSpec(
        x_min=float(tr.q.min()) - 10.0, x_max=float(tr.q.max()) + 10.0, count=2001,
    )
    times = cfg.times or [float(tr.times[0]), float(tr.times[-1])]
    wave = emit_grid(tr, grid, times)

    manifest = _manifest(cfg, "wavefield")
    manifest.write_csv(wave.to_frame(), "wavefield.csv", "wavefield")
    spec0 = eigendecompose(lax_from_state(tr.initial))
    profile = asymptotic_residual(tr.state_at(times[-1]), spec0, times[-1] - float(tr.times[0]), grid)
    manifest.write_json({"interpolation": wave.interpolation, "profile": profile.to_dict()},
                        "wavefield_report.json", "report")
    manifest.save()

    _banner(f"WAVEFIELD  {len(times)} time(s) x {grid.count} points")
    print(f"  profile residual at t={profile.t:g}: {profile.residual:.3e} (target: {profile.target})\n")
    return EXIT_OK


def run_asymptotics(cfg: RunConfig) -> AsymptoticsReport:
    """Integrate one config (auto-extending if asked) and analyze it."""
    s0 = build_state(cfg)
    spec0 = eigendecompose(lax_from_state(s0))
    integrator = asymptotic_config(cfg.integrator)
    if cfg.auto_extend:
        tr, sorting = integrate_until_converged(s0, integrator, cfg.threshold, cfg.t_cap, spec0)
        report = analyze(tr, spec0, cfg.threshold)
        return replace(report, extended=sorting.extended, cap_reached=sorting.cap_reached)
    tr = integrate(s0, integrator)
    return analyze(tr, spec0, cfg.threshold)


def cmd_asymptotics(args: argparse.Namespace) -> int:
    """Sorting, scattering and separation diagnostics of one run."""
    cfg = resolve_config(args)
    manifest = _manifest(cfg, "asymptotics")
    if args.trajectory:
        tr = read_trajectory_csv(args.trajectory, cfg.sector.build())
        report = analyze(tr, eigendecompose(lax_from_state(tr.initial)), cfg.threshold)
    else:
        report = run_asymptotics(cfg)

    manifest.write_json(report.to_dict(), "asymptotics.json", "report")
    manifest.write_csv(report.to_frame(), "asymptotics.csv", "report")
    manifest.metadata["converged"] = report.converged
    if args.markdown:
        markdown = MarkdownReportGenerator("Asymptotics Summary").generate_full_report(asymptotics=[report])
        md_path = Path(args.markdown)
        md_path.parent.mkdir(parents=True, exist_ok=True)
        md_path.write_text(markdown, encoding="utf-8")
        manifest.add(md_path, "markdown")
    manifest.save()

    _banner(f"ASYMPTOTICS  n={report.n}  sector={report.sector['tag']}  t_end={report.t_end:g}")
    print(f"  max |p'_j - target| = {report.max_momentum_residual:.3e}")
    print(f"  max |slope - target| = {report.max_slope_residual:.3e}")
    print(f"  {'✅ converged' if report.converged else '⚠️  not converged'}\n")
    return EXIT_OK


def _sweep_job(config: Dict[str, Any]) -> AsymptoticsReport:
    return run_asymptotics(RunConfig.model_validate(config))


def cmd_sweep(args: argparse.Namespace) -> int:
    """Asymptotics over several n (or permutations) in a process pool."""
    cfg = resolve_config(args)
    settings = RuntimeSettings.from_env()
    base = config_echo(cfg)

    if args.permutations:
        variants = []
        for text in args.permutations:
            perm = [int(v) for v in text.split(",")]
            variants.append(build_config(base, {"sector": {"permutation": perm}}))
    else:
        ns = args.ns or [cfg.n]
        variants = [build_config(base, {"n": n, "sector": {"permutation": None}}) for n in ns]

    _banner(f"SWEEP  {len(variants)} run(s) on {settings.workers} worker(s)")
    jobs = [config_echo(v) for v in variants]
    if settings.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=settings.workers) as pool:
            reports = list(pool.map(_sweep_job, jobs))
    else:
        reports = [_sweep_job(job) for job in jobs]

    manifest = _manifest(cfg, "sweep")
    for i, report in enumerate(reports, 1):
        manifest.write_csv(report.to_frame(), f"sweep_{i:02d}_n{report.n}.csv", "report")
        print(f"  run {i}: n={report.n} sector={report.sector['tag']} converged={report.converged}")
    summary: Dict[str, Any] = {"runs": [r.to_dict() for r in reports]}

    trend = None
    if not args.permutations and len(reports) >= 3:
        trend = sublinear_trend(reports)
        manifest.write_csv(trend.frame, "sweep_trend.csv", "trend")
        summary["trend"] = trend.to_dict()
        print(f"  slope decreasing: {trend.slope_decreasing}, plateau decreasing: {trend.plateau_decreasing}")
    manifest.write_json(summary, "sweep.json", "report")
    if args.markdown:
        markdown = MarkdownReportGenerator("Sweep Summary").generate_full_report(asymptotics=reports, trend=trend)
        md_path = Path(args.markdown)
        md_path.parent.mkdir(parents=True, exist_ok=True)
        md_path.write_text(markdown, encoding="utf-8")
        manifest.add(md_path, "markdown")
    manifest.save()
    print()
    return EXIT_OK


# ==========================================================================
# ARGUMENTS
# ==========================================================================

def _add_run_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON run config; flags override its fields")
    parser.add_argument("--n", type=int)
    parser.add_argument("--sector", choices=["S_minus", "S_plus", "S_minus_perm", "S_plus_perm"])
    parser.add_argument("--permutation", type=int, nargs="+", help="pi(1) ... pi(n), 1-based")
    parser.add_argument("--q", type=float, nargs="+")
    parser.add_argument("--p", type=float, nargs="+")
    parser.add_argument("--generator", choices=["geometric", "random"])
    parser.add_argument("--C", type=float)
    parser.add_argument("--r", type=float)
    parser.add_argument("--d", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--t-end", dest="t_end", type=float)
    parser.add_argument("--rel-tol", dest="rel_tol", type=float)
    parser.add_argument("--abs-tol", dest="abs_tol", type=float)
    parser.add_argument("--max-step", dest="max_step", type=float)
    parser.add_argument("--output-stride", dest="output_stride", type=int)
    parser.add_argument("--dense-output", dest="dense_output", action="store_true")
    parser.add_argument("--solver", choices=["ode", "factorization", "both"])
    parser.add_argument("--both", dest="solver", action="store_const", const="both",
                        help="Shorthand for --solver both")
    parser.add_argument("--dt-max", dest="dt_max", type=float)
    parser.add_argument("--output-dir", dest="output_dir")
    parser.add_argument("--times", type=float, nargs="+")
    parser.add_argument("--threshold", type=float)
    parser.add_argument("--t-cap", dest="t_cap", type=float)
    parser.add_argument("--auto-extend", dest="auto_extend", action="store_true")
    parser.add_argument("--x-min", dest="x_min", type=float)
    parser.add_argument("--x-max", dest="x_max", type=float)
    parser.add_argument("--count", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="peakon-toda", description="Truncated peakon lattice experiments")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, handler in (("simulate", cmd_simulate), ("spectrum", cmd_spectrum)):
        p = sub.add_parser(name)
        _add_run_arguments(p)
        p.set_defaults(handler=handler)

    for name, handler in (("wavefield", cmd_wavefield), ("asymptotics", cmd_asymptotics)):
        p = sub.add_parser(name)
        _add_run_arguments(p)
        p.add_argument("--trajectory", help="Trajectory CSV to read instead of integrating")
        p.add_argument("--markdown", help="Also write a markdown summary here")
        p.set_defaults(handler=handler)

    p = sub.add_parser("sweep")
    _add_run_arguments(p)
    p.add_argument("--ns", type=int, nargs="+", help="Truncation sizes to run")
    p.add_argument("--permutations", nargs="+", help="Comma-separated permutations, e.g. 2,1 1,2")
    p.add_argument("--markdown", help="Also write a markdown summary here")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("verify")
    p.add_argument("--suite", action="append", help="Suite name (repeatable) or 'all'")
    p.add_argument("--n", type=int, help="Truncation size for the sorting and scattering suites")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rel-tol", dest="rel_tol", type=float)
    p.add_argument("--output-dir", dest="output_dir", default="results")
    p.add_argument("--markdown", help="Also write a markdown summary here")
    p.set_defaults(handler=cmd_verify)
    return parser


# ==========================================================================
# ENTRY POINT
# ==========================================================================

def _write_failure(args: argparse.Namespace, error: PeakonError) -> Optional[Path]:
    out = Path(getattr(args, "output_dir", None) or "results")
    try:
        return write_json({"command": args.command, **error.to_dict()}, out / "failure.json")
    except OSError as e:
        logger.error(f"Could not write failure diagnostic: {e}")
        return None


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one subcommand and map errors onto exit codes."""
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        settings = RuntimeSettings.from_env()
    except ConfigError as e:
        print(f"❌ Config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else getattr(logging, settings.log_level, logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )

    try:
        return args.handler(args)
    except NumericalError as e:
        logger.error(f"Numerical failure: {e}")
        path = _write_failure(args, e)
        print(f"❌ Numerical failure: {e}", file=sys.stderr)
        if path:
            print(f"   Diagnostic written to {path}", file=sys.stderr)
        return EXIT_NUMERICAL
    except PeakonError as e:
        field = getattr(e, "field", None)
        logger.error(f"Config error{f' in {field}' if field else ''}: {e}")
        print(f"❌ Config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == '__main__':
    sys.exit(main())
