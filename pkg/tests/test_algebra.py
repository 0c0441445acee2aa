import math

import numpy as np
import pytest
import scipy.linalg

from peakon_toda.algebra import (
    ad_pairing,
    commutator,
    compound,
    dual_project_lower,
    dual_project_skew,
    hamiltonian_hierarchy,
    hierarchy_gradient,
    hs_inner,
    index_sets,
    lie_poisson_bracket,
    mybe_residual,
    neumann_bound,
    project_lower,
    project_skew,
    r_bracket,
    r_matrix,
    require_symmetric,
    sym_exp,
)
from peakon_toda.errors import DimensionError, SymmetryError


def test_splitting_reproduces_matrix(rng):
    A = rng.standard_normal((6, 6))
    K, L = project_skew(A), project_lower(A)
    np.testing.assert_allclose(K + L, A, rtol=0, atol=4 * np.finfo(float).eps * np.abs(A).max())
    np.testing.assert_array_equal(K, -K.T)
    np.testing.assert_array_equal(np.triu(L, 1), 0.0)


def test_projection_examples():
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(project_skew(A), [[0.0, 2.0], [-2.0, 0.0]])
    np.testing.assert_array_equal(project_lower(A), [[1.0, 0.0], [5.0, 4.0]])
    np.testing.assert_array_equal(r_matrix(A), [[1.0, -2.0], [7.0, 4.0]])


def test_projections_are_idempotent(rng):
    A = rng.standard_normal((5, 5))
    np.testing.assert_array_equal(project_skew(project_skew(A)), project_skew(A))
    np.testing.assert_array_equal(project_lower(project_lower(A)), project_lower(A))


def test_modified_yang_baxter_holds(rng):
    for _ in range(5):
        A, B = rng.standard_normal((5, 5)), rng.standard_normal((5, 5))
        assert np.max(np.abs(mybe_residual(A, B))) < 1e-12


def test_r_bracket_is_antisymmetric(rng):
    A, B = rng.standard_normal((4, 4)), rng.standard_normal((4, 4))
    np.testing.assert_allclose(r_bracket(A, B), -r_bracket(B, A), atol=1e-13)


def test_dual_projections_are_adjoint(rng):
    A, L = rng.standard_normal((5, 5)), rng.standard_normal((5, 5))
    assert ad_pairing(project_skew(A), L) == pytest.approx(ad_pairing(A, dual_project_skew(L)), abs=1e-12)
    assert ad_pairing(project_lower(A), L) == pytest.approx(ad_pairing(A, dual_project_lower(L)), abs=1e-12)


def test_pairings(rng):
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    B = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert ad_pairing(A, B) == 3.0
    assert hs_inner(A, B) == 2.0
    S = rng.standard_normal((4, 4))
    S = S + S.T
    M = rng.standard_normal((4, 4))
    assert ad_pairing(M, S) == pytest.approx(hs_inner(M, S), abs=1e-14)
    with pytest.raises(DimensionError):
        hs_inner(np.eye(2), np.eye(3))


def test_dual_skew_vanishes_on_symmetric(rng):
    S = rng.standard_normal((4, 4))
    S = S + S.T
    np.testing.assert_array_equal(dual_project_skew(S), 0.0)
    np.testing.assert_array_equal(dual_project_lower(S), S)


def test_hierarchy_hamiltonians_commute(rng):
    S = rng.standard_normal((5, 5))
    L = 0.25 * (S + S.T)
    for i in (1, 2, 3):
        for j in (1, 2, 3):
            value = lie_poisson_bracket(hierarchy_gradient(L, i), hierarchy_gradient(L, j), L)
            assert abs(value) < 1e-12


def test_hamiltonian_hierarchy_matches_eigenvalues(rng):
    S = rng.standard_normal((4, 4))
    L = S + S.T
    w = np.linalg.eigvalsh(L)
    assert hamiltonian_hierarchy(L, 1) == pytest.approx(np.sum(w ** 2) / 4.0)
    assert hamiltonian_hierarchy(L, 2) == pytest.approx(np.sum(w ** 3) / 6.0)
    with pytest.raises(DimensionError):
        hamiltonian_hierarchy(L, 0)


def test_commutator_size_mismatch():
    with pytest.raises(DimensionError):
        commutator(np.eye(2), np.eye(3))


def test_require_symmetric_rejects_asymmetric():
    with pytest.raises(SymmetryError):
        require_symmetric(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_sym_exp_matches_expm(rng):
    S = rng.standard_normal((5, 5))
    S = 0.5 * (S + S.T)
    np.testing.assert_allclose(sym_exp(S, 0.7), scipy.linalg.expm(0.7 * S), rtol=1e-12, atol=1e-12)
    np.testing.assert_array_equal(sym_exp(S, 0.0), np.eye(5))


def test_compound_orders(rng):
    M = rng.standard_normal((4, 4))
    np.testing.assert_allclose(compound(M, 1).values, M)
    assert compound(M, 4).values[0, 0] == pytest.approx(np.linalg.det(M))
    C2 = compound(M, 2)
    assert C2.values.shape == (6, 6)
    assert C2.index_sets == tuple(index_sets(4, 2))
    assert C2.entry((1, 3), (2, 4)) == pytest.approx(np.linalg.det(M[np.ix_([0, 2], [1, 3])]))


def test_compound_is_multiplicative(rng):
    A, B = rng.standard_normal((5, 5)), rng.standard_normal((5, 5))
    lhs = compound(A @ B, 2).values
    rhs = compound(A, 2).values @ compound(B, 2).values
    np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-10)


def test_compound_rejects_bad_order():
    with pytest.raises(DimensionError):
        compound(np.eye(3), 0)
    with pytest.raises(DimensionError):
        compound(np.eye(3), 4)
    with pytest.raises(DimensionError):
        compound(np.eye(3), 2).position((2, 1))


def test_neumann_bound_strictly_lower(rng):
    A = np.tril(rng.standard_normal((6, 6)), -1)
    for power in range(1, 6):
        lhs, rhs = neumann_bound(A, power)
        assert lhs <= rhs * (1 + 1e-12)


def test_neumann_bound_fails_with_diagonal():
    lhs, rhs = neumann_bound(np.array([[-1.0]]), 2)
    assert lhs == 1.0
    assert rhs == pytest.approx(1.0 / math.sqrt(2.0))
    assert lhs > rhs
