import numpy as np
import pytest

from peakon_toda.integrator import PIControlledDOP853


def _run(solver):
    while solver.status == "running":
        solver.step()
    return solver


def test_harmonic_oscillator_full_period():
    solver = _run(PIControlledDOP853(
        lambda t, y: np.array([y[1], -y[0]]), 0.0, np.array([1.0, 0.0]), 2 * np.pi,
        rtol=1e-11, atol=1e-13,
    ))
    assert solver.status == "finished"
    np.testing.assert_allclose(solver.y, [1.0, 0.0], atol=1e-9)
    assert solver.n_accepted > 0


def test_exponential_decay_with_dense_output():
    solver = PIControlledDOP853(lambda t, y: -y, 0.0, np.array([1.0]), 3.0, rtol=1e-10, atol=1e-12)
    solver.step()
    t_mid = 0.5 * (solver.t_old + solver.t)
    assert solver.dense_output()(t_mid)[0] == pytest.approx(np.exp(-t_mid), rel=1e-9)
    _run(solver)
    assert solver.y[0] == pytest.approx(np.exp(-3.0), rel=1e-9)


def test_rejections_are_counted():
    # an oversized first step must be rejected before the controller settles
    solver = _run(PIControlledDOP853(
        lambda t, y: -50.0 * y, 0.0, np.array([1.0]), 1.0,
        rtol=1e-10, atol=1e-12, first_step=0.5,
    ))
    assert solver.n_rejected >= 1
    assert solver.y[0] == pytest.approx(np.exp(-50.0), abs=1e-12)
