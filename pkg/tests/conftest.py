"""Shared fixtures: seeded generators and the small analytic states."""

import numpy as np
import pytest

from peakon_toda.models import IntegratorConfig
from peakon_toda.states import S_MINUS, S_PLUS, PeakonState, geometric_state


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def n2_minus():
    """q = (-1, 1), p = (1, 1): unit gap 2, closed-form spectrum (1 +- e^-1)/2."""
    return PeakonState([-1.0, 1.0], [1.0, 1.0], S_MINUS)


@pytest.fixture
def n2_plus():
    return PeakonState([1.0, -1.0], [1.0, 1.0], S_PLUS)


@pytest.fixture
def geometric_plus():
    return geometric_state(4, C=1.0, r=0.6, d=1.0, sector=S_PLUS)


@pytest.fixture
def tight():
    """Integrator settings used by the accuracy tests."""
    return IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12, t_end=10.0)
