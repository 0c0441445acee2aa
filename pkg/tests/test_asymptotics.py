import math

import numpy as np
import pandas as pd
import pytest

from peakon_toda.asymptotics import (
    AsymptoticsReport,
    SectorPermutation,
    analyze,
    asymptotic_config,
    eigenvalue_targets,
    horizon_cap,
    integrate_until_converged,
    late_window,
    offdiagonal_mass,
    permutation_equivariance,
    permuted_sector_run,
    scattering_fit,
    separation_check,
    sorting_check,
    spectral_gap,
    sublinear_trend,
)
from peakon_toda.errors import InsufficientDataError, SectorError
from peakon_toda.flows import Trajectory, integrate
from peakon_toda.semiseparable import lax_from_state
from peakon_toda.spectral import eigendecompose
from peakon_toda.states import S_MINUS, S_PLUS, PeakonState, Sector, SectorKind, geometric_state

E1 = math.exp(-1.0)


def _spectrum(s):
    return eigendecompose(lax_from_state(s))


def test_targets_follow_sector(n2_minus):
    spec = _spectrum(n2_minus)
    np.testing.assert_array_equal(eigenvalue_targets(spec, SectorKind.S_PLUS), spec.lambdas)
    np.testing.assert_array_equal(eigenvalue_targets(spec, SectorKind.S_MINUS), spec.lambdas[::-1])


def test_two_peakon_sorting_plus(n2_plus, tight):
    tr = integrate(n2_plus, asymptotic_config(tight.model_copy(update={"t_end": 100.0})))
    report = analyze(tr, _spectrum(n2_plus))
    np.testing.assert_allclose(report.momenta, [1 + E1, 1 - E1], atol=1e-4)
    assert report.sorted_converged
    assert report.scattering_converged
    assert report.separating
    np.testing.assert_allclose(report.diagonal_limits, report.lambdas, atol=1e-4)
    assert report.converged
    assert list(report.to_frame().columns)[:3] == ["j", "original_index", "lambda"]


@pytest.mark.slow
def test_two_peakon_sorting_minus(n2_minus, tight):
    tr = integrate(n2_minus, asymptotic_config(tight.model_copy(update={"t_end": 100.0})))
    report = sorting_check(tr, _spectrum(n2_minus), threshold=1e-4)
    np.testing.assert_allclose(report.momenta, [1 - E1, 1 + E1], atol=1e-4)
    assert report.sorted_converged


def test_sorting_rejects_wrong_kind(n2_plus, tight):
    tr = integrate(n2_plus, tight.model_copy(update={"t_end": 1.0}))
    with pytest.raises(SectorError):
        sorting_check(tr, _spectrum(n2_plus), expected_kind=SectorKind.S_MINUS)


def test_scattering_needs_samples(n2_plus, tight):
    tr = integrate(n2_plus, tight)
    with pytest.raises(InsufficientDataError):
        scattering_fit(tr, _spectrum(n2_plus), window=(100.0, 200.0))


@pytest.mark.parametrize("state", ["n2_plus", "n2_minus"])
def test_offdiagonal_mass_decays(state, tight, request):
    tr = integrate(request.getfixturevalue(state), tight.model_copy(update={"t_end": 50.0}))
    mass = offdiagonal_mass(tr)
    assert mass[-1] < 1e-3 * mass[0]
    tail = mass[int(0.75 * mass.size):]
    assert np.all(np.diff(tail) < 0.0)


def test_integrate_until_converged_extends(n2_plus, tight):
    tr, report = integrate_until_converged(
        n2_plus, tight.model_copy(update={"t_end": 1.0}), threshold=1e-3, cap=64.0
    )
    assert report.extended
    assert report.sorted_converged
    assert not report.cap_reached
    assert tr.times[-1] < 64.0
    assert np.all(np.diff(tr.times) > 0)


def test_integrate_until_converged_cap(n2_plus, tight):
    _, report = integrate_until_converged(
        n2_plus, tight.model_copy(update={"t_end": 1.0}), threshold=1e-14, cap=2.0
    )
    assert report.cap_reached
    assert not report.sorted_converged


def test_integrate_until_converged_requires_slopes(n2_plus, tight):
    cfg = asymptotic_config(tight.model_copy(update={"t_end": 10.0}))
    tr, report = integrate_until_converged(n2_plus, cfg, threshold=1e-3, cap=400.0, require_scattering=True)
    assert report.sorted_converged and report.scattering_converged
    assert report.window == pytest.approx(late_window(tr))
    assert report.window[0] == pytest.approx(0.75 * tr.times[-1])
    assert not report.cap_reached


def test_spectral_gap_and_horizon(n2_plus):
    spec = _spectrum(n2_plus)
    # lambdas (1 +- e^-1)/2: the bottom eigenvalue is below their spacing e^-1
    assert spectral_gap(spec) == pytest.approx((1 - E1) / 2)
    assert horizon_cap(spec, 400.0) == 400.0
    assert horizon_cap(spec, 10.0) == pytest.approx(64.0 / (1 - E1))

    tight_pair = _spectrum(geometric_state(5, C=1.0, r=0.6, d=1.0, sector=S_MINUS))
    assert spectral_gap(tight_pair) < 0.05
    assert horizon_cap(tight_pair, 400.0) > 400.0


def test_late_window(n2_plus, tight):
    tr = integrate(n2_plus, tight.model_copy(update={"t_end": 8.0}))
    assert late_window(tr) == pytest.approx((6.0, 8.0))
    assert late_window(tr, fraction=0.5) == pytest.approx((4.0, 8.0))


def _gap_trajectory(gaps):
    gaps = np.asarray(gaps, dtype=float)
    q = np.column_stack([np.zeros_like(gaps), gaps])
    return Trajectory(np.arange(gaps.size, dtype=float), q, np.ones_like(q), S_MINUS, pd.DataFrame())


def test_separation_single_peakon_is_vacuous(tight):
    tr = integrate(PeakonState([0.0], [1.0], S_PLUS), tight)
    result = separation_check(tr)
    assert result.separating
    assert result.min_gaps == []


def test_separation_looks_at_last_quartile():
    # a dip early on does not matter; the last three of twelve samples do
    dip = [1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.6, 0.8, 1.0, 1.2, 1.5, 2.0]
    assert separation_check(_gap_trajectory(dip)).separating

    late_wobble = dip[:10] + [1.1, 2.0]
    assert not separation_check(_gap_trajectory(late_wobble)).separating

    shrunk = [3.0] + dip[1:]
    assert not separation_check(_gap_trajectory(shrunk)).separating


def test_separation_two_peakons(n2_plus, tight):
    tr = integrate(n2_plus, asymptotic_config(tight.model_copy(update={"t_end": 100.0})))
    result = separation_check(tr)
    assert result.separating
    assert result.min_gaps[-1] > result.min_gaps[0]


@pytest.mark.slow
def test_separation_five_peakons_minus(tight):
    s0 = geometric_state(5, C=1.0, r=0.6, d=1.0, sector=S_MINUS)
    tr = integrate(s0, asymptotic_config(tight.model_copy(update={"t_end": 1600.0})))
    result = separation_check(tr)
    assert result.separating
    assert len(result.times) == len(result.min_gaps) == len(tr)


def test_sector_permutation():
    perm = SectorPermutation.from_sequence([2, 3, 1])
    assert perm.valid
    assert perm.inverse() == (3, 1, 2)
    assert SectorPermutation.identity(3).inverse() == (1, 2, 3)
    bad = SectorPermutation.from_sequence([1, 1])
    assert not bad.valid
    with pytest.raises(SectorError):
        bad.inverse()
    with pytest.raises(SectorError):
        bad.sector(SectorKind.S_PLUS)


def test_permuted_plus_sector_limits(tight):
    sector = SectorPermutation.from_sequence([2, 1]).sector(SectorKind.S_PLUS)
    s0 = geometric_state(2, C=2.0, r=0.5, d=2.0, sector=sector)
    report = permuted_sector_run(s0, tight.model_copy(update={"t_end": 100.0}))
    assert report.sector["permutation"] == [2, 1]
    np.testing.assert_allclose(report.momenta, 2 * np.asarray(report.lambdas), atol=1e-3)
    assert report.converged


def test_permutation_equivariance(tight):
    s0 = geometric_state(3, C=1.0, r=0.6, d=1.0, sector=Sector(SectorKind.S_PLUS, (2, 3, 1)))
    assert permutation_equivariance(s0, tight.model_copy(update={"t_end": 5.0})) <= 1e-8


def _trend_report(n, slope, plateau):
    return AsymptoticsReport(
        sector={"tag": "S_minus", "permutation": None}, n=n, t_end=400.0,
        lambdas=[1.0, plateau / 2], slopes=[slope], momenta=[plateau],
    )


def test_sublinear_trend_table():
    table = sublinear_trend([_trend_report(5, 0.05, 0.1), _trend_report(3, 0.2, 0.4), _trend_report(4, 0.1, 0.2)])
    assert table.frame["n"].tolist() == [3, 4, 5]
    assert table.slope_decreasing and table.plateau_decreasing
    assert table.frame["slope_change"].iloc[1] == pytest.approx(-0.5)
    assert table.to_dict()["rows"][0]["n"] == 3


def test_sublinear_trend_needs_three_runs():
    with pytest.raises(InsufficientDataError):
        sublinear_trend([_trend_report(3, 0.2, 0.4), _trend_report(4, 0.1, 0.2)])
    with pytest.raises(InsufficientDataError):
        sublinear_trend([_trend_report(3, 0.2, 0.4), _trend_report(4, 0.1, 0.2),
                         AsymptoticsReport(sector={}, n=5, t_end=1.0, lambdas=[1.0])])
