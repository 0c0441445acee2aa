import logging
import math

import numpy as np
import pytest

from peakon_toda.errors import InsufficientDataError
from peakon_toda.flows import integrate
from peakon_toda.models import GridSpec
from peakon_toda.semiseparable import lax_from_state
from peakon_toda.spectral import eigendecompose
from peakon_toda.states import S_PLUS, PeakonState
from peakon_toda.wavefield import (
    asymptotic_residual,
    emit_grid,
    evaluate_u,
    state_grid,
    total_mass,
)


def test_evaluate_u_two_peakons(n2_minus):
    assert evaluate_u(n2_minus, 0.0) == pytest.approx(math.exp(-1.0), rel=1e-15)
    values = evaluate_u(n2_minus, [-1.0, 1.0])
    np.testing.assert_allclose(values, 0.5 * (1 + math.exp(-2.0)))


def test_single_peakon_matches_long_time_profile(tight):
    s0 = PeakonState([0.0], [1.5], S_PLUS)
    spec0 = eigendecompose(lax_from_state(s0))
    tr = integrate(s0, tight.model_copy(update={"t_end": 2.0}))
    result = asymptotic_residual(tr.final, spec0, 2.0, GridSpec(x_min=-5.0, x_max=8.0, count=501))
    assert result.target == "profile"
    assert result.residual < 1e-12
    assert result.literal_residual < 1e-10
    assert result.covers_support
    assert abs(result.phases[0]) < 1e-10


def test_minus_sector_compares_with_zero(n2_minus):
    spec0 = eigendecompose(lax_from_state(n2_minus))
    result = asymptotic_residual(n2_minus, spec0, 0.0, GridSpec(x_min=-3.0, x_max=3.0, count=601))
    assert result.target == "zero"
    assert result.residual == result.literal_residual
    assert result.residual == pytest.approx(0.5 * (1 + math.exp(-2.0)))


def test_total_mass_equals_momentum(n2_minus):
    mass = total_mass(n2_minus)
    assert mass["P"] == 2.0
    assert mass["error"] < 1e-6
    assert mass["tail_bound"] < 1e-12


def test_total_mass_warns_on_short_window(n2_minus, caplog):
    with caplog.at_level(logging.WARNING, logger="peakon_toda.wavefield"):
        total_mass(n2_minus)
    assert not caplog.records

    with caplog.at_level(logging.WARNING, logger="peakon_toda.wavefield"):
        mass = total_mass(n2_minus, margin=5.0, points=2001)
    assert mass["tail_bound"] == pytest.approx(2.0 * math.exp(-5.0))
    assert any("tail bound" in r.getMessage() for r in caplog.records)


def test_emit_grid(n2_minus, tight):
    tr = integrate(n2_minus, tight)
    grid = GridSpec(x_min=-5.0, x_max=20.0, count=101)
    on_samples = emit_grid(tr, grid, [tr.times[0], tr.times[-1]])
    assert on_samples.interpolation == "samples"
    assert on_samples.values.shape == (2, 101)
    np.testing.assert_allclose(on_samples.values[0], evaluate_u(n2_minus, grid.points()))

    between = emit_grid(tr, grid, [0.5 * (tr.times[1] + tr.times[2])])
    assert between.interpolation == "hermite"

    frame = on_samples.to_frame()
    assert list(frame.columns) == ["t", "x", "u"]
    assert len(frame) == 202

    with pytest.raises(InsufficientDataError):
        emit_grid(tr, grid, [])


def test_state_grid(n2_plus):
    grid = GridSpec(x_min=-2.0, x_max=2.0, count=5)
    wave = state_grid(n2_plus, grid, t=1.0)
    assert wave.times.tolist() == [1.0]
    assert wave.to_dict()["values"][0][2] == pytest.approx(math.exp(-1.0))
