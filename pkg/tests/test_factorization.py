import numpy as np
import pytest

from peakon_toda.algebra import sym_exp
from peakon_toda.errors import DimensionError, RankDeficiencyError
from peakon_toda.factorization import FactorizationPair, factorize, group_product


def _invertible(rng, n):
    return np.eye(n) + 0.3 * rng.standard_normal((n, n))


def test_factorize_reassembles(rng):
    G = _invertible(rng, 5)
    pair = factorize(G)
    np.testing.assert_allclose(pair.product(), G, atol=1e-12)
    np.testing.assert_array_equal(np.triu(pair.b_minus, 1), 0.0)
    assert np.all(np.diag(pair.b_minus) > 0)
    assert pair.orthogonality_residual() < 1e-13


def test_factorize_identity():
    pair = factorize(np.eye(3))
    np.testing.assert_allclose(pair.b_minus, np.eye(3), atol=1e-15)
    np.testing.assert_allclose(pair.b_plus, np.eye(3), atol=1e-15)
    assert FactorizationPair.identity(3).n == 3


def test_factorize_exponential_of_symmetric(rng):
    S = rng.standard_normal((4, 4))
    S = 0.5 * (S + S.T)
    G = sym_exp(S, 0.5)
    pair = factorize(G)
    np.testing.assert_allclose(pair.b_minus @ pair.b_plus.T, G, rtol=1e-12, atol=1e-12)


def test_factorize_rank_deficient():
    G = np.array([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(RankDeficiencyError) as info:
        factorize(G)
    assert "min_pivot" in info.value.diagnostic


def test_group_product_multiplies_factors(rng):
    g, h = _invertible(rng, 4), _invertible(rng, 4)
    fg, fh = factorize(g), factorize(h)
    product = factorize(group_product(g, h))
    np.testing.assert_allclose(product.b_minus, fg.b_minus @ fh.b_minus, atol=1e-10)
    np.testing.assert_allclose(product.b_plus, fg.b_plus @ fh.b_plus, atol=1e-10)


def test_group_product_identity(rng):
    g = _invertible(rng, 3)
    np.testing.assert_allclose(group_product(np.eye(3), g), g, atol=1e-14)


def test_group_product_size_mismatch():
    with pytest.raises(DimensionError):
        group_product(np.eye(2), np.eye(3))
