import math

import numpy as np
import pytest

from peakon_toda.errors import DimensionError, SpectrumError
from peakon_toda.flows import toda_solve
from peakon_toda.semiseparable import lax_from_state
from peakon_toda.spectral import (
    compound_closed_form,
    compound_evolution_check,
    compound_projection,
    diagonal_sum_identity,
    eigendecompose,
    first_component_evolution,
    leading_projection,
    ratio_law_residual,
    spectrum_drift,
)
from peakon_toda.states import S_MINUS, FlowSign, geometric_state, random_state

E1 = math.exp(-1.0)


def test_n2_eigenvalues(n2_minus):
    spec = eigendecompose(lax_from_state(n2_minus))
    np.testing.assert_allclose(spec.lambdas, [(1 + E1) / 2, (1 - E1) / 2], rtol=1e-14)
    assert np.all(spec.first_row > 0)
    assert spec.orthogonality_residual() < 1e-14


def test_convention_and_reconstruction(rng):
    lax = lax_from_state(random_state(6, rng))
    spec = eigendecompose(lax)
    assert np.all(np.diff(spec.lambdas) < 0)
    assert np.all(spec.Phi[0] >= 0)
    L = spec.reconstruct()
    np.testing.assert_array_equal(L, L.T)
    np.testing.assert_allclose(L, lax.matrix, atol=1e-13)


def test_lax_contract_rejects_degenerate_spectrum():
    with pytest.raises(SpectrumError):
        eigendecompose(np.eye(3), lax=True)
    spec = eigendecompose(np.eye(3))
    np.testing.assert_allclose(spec.lambdas, 1.0)


def test_spectrum_drift():
    assert spectrum_drift([2.0, 1.0], [1.0, 2.0]) == 0.0
    assert spectrum_drift([2.0, 1.0], [2.0, 1.1]) == pytest.approx(0.1)
    with pytest.raises(DimensionError):
        spectrum_drift([1.0], [1.0, 2.0])


def test_first_component_closed_form(rng):
    spec0 = eigendecompose(lax_from_state(random_state(4, rng)))
    np.testing.assert_allclose(first_component_evolution(spec0, 0.0), spec0.first_row, atol=1e-15)
    for t in (1.0, 50.0, 1e4):
        phi = first_component_evolution(spec0, t)
        assert np.linalg.norm(phi) == pytest.approx(1.0)
        assert np.all(np.isfinite(phi))


def test_first_component_matches_factorization_route():
    s = geometric_state(5, C=2.0, r=0.6, d=1.0, sector=S_MINUS)
    spec0 = eigendecompose(lax_from_state(s))
    for t in (1.0, 5.0):
        Lt = toda_solve(spec0.reconstruct(), t, FlowSign.MINUS)
        observed = eigendecompose(Lt).first_row
        np.testing.assert_allclose(observed, first_component_evolution(spec0, t), atol=1e-8)


def test_ratio_law():
    s = geometric_state(5, C=2.0, r=0.6, d=1.0, sector=S_MINUS)
    spec0 = eigendecompose(lax_from_state(s))
    assert ratio_law_residual(spec0, 2.0, 1, 3) < 1e-8
    with pytest.raises(DimensionError):
        ratio_law_residual(spec0, 2.0, 0, 3)


def test_compound_closed_form_at_zero(rng):
    spec0 = eigendecompose(lax_from_state(random_state(4, rng)))
    predicted = compound_closed_form(spec0, 0.0, 2)
    assert len(predicted) == 6
    for I, value in predicted.items():
        assert value == pytest.approx(compound_projection(spec0, 2, I), abs=1e-13)
    # Cauchy-Binet over an orthonormal frame
    assert sum(predicted.values()) == pytest.approx(1.0)


def test_compound_evolution(rng):
    spec0 = eigendecompose(lax_from_state(random_state(4, rng)))
    for k in (1, 2, 3):
        assert compound_evolution_check(spec0, 1.0, k) < 1e-8


def test_compound_projection_validation(rng):
    spec0 = eigendecompose(lax_from_state(random_state(3, rng)))
    with pytest.raises(DimensionError):
        compound_projection(spec0, 2, (2, 1))
    with pytest.raises(DimensionError):
        compound_projection(spec0, 2, (1, 4))


def test_leading_projection_tends_to_one():
    s = geometric_state(4, C=16.0, r=0.5, d=6.0, sector=S_MINUS)
    spec0 = eigendecompose(lax_from_state(s))
    Lt = toda_solve(spec0.reconstruct(), 40.0, FlowSign.PLUS)
    assert leading_projection(eigendecompose(Lt), 2) > 1 - 1e-6


def test_diagonal_sum_identity(rng):
    lax = lax_from_state(random_state(5, rng))
    spec = eigendecompose(lax)
    for k in (1, 2, 3):
        assert diagonal_sum_identity(lax.matrix, spec, k) < 1e-10
