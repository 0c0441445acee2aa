import numpy as np
import pytest

from peakon_toda.errors import DimensionError, SectorError
from peakon_toda.states import (
    S_MINUS,
    S_PLUS,
    FlowSign,
    PeakonState,
    Sector,
    SectorKind,
    geometric_state,
    random_state,
    sector_from_tag,
    tail_bound,
)


def test_sector_ordering():
    PeakonState([0.0, 1.0, 3.0], [1.0, 1.0, 1.0], S_MINUS)
    PeakonState([3.0, 1.0, 0.0], [1.0, 1.0, 1.0], S_PLUS)
    with pytest.raises(SectorError) as info:
        PeakonState([0.0, 2.0, 1.0], [1.0, 1.0, 1.0], S_MINUS)
    assert info.value.diagnostic["canonical_index"] == 2


def test_inverse_order_undoes_order():
    sector = Sector(SectorKind.S_PLUS, (3, 1, 2))
    np.testing.assert_array_equal(sector.order(3), [2, 0, 1])
    np.testing.assert_array_equal(sector.inverse_order(3), [1, 2, 0])
    np.testing.assert_array_equal(sector.order(3)[sector.inverse_order(3)], [0, 1, 2])
    np.testing.assert_array_equal(S_MINUS.inverse_order(4), np.arange(4))


def test_state_validation():
    with pytest.raises(DimensionError):
        PeakonState([0.0, 1.0], [1.0], S_MINUS)
    with pytest.raises(SectorError):
        PeakonState([0.0, 1.0], [1.0, -1.0], S_MINUS)
    with pytest.raises(SectorError):
        PeakonState([0.0, np.nan], [1.0, 1.0], S_MINUS)


def test_state_arrays_are_read_only(n2_minus):
    with pytest.raises(ValueError):
        n2_minus.q[0] = 5.0


def test_permuted_sector_relabels():
    sector = Sector(SectorKind.S_MINUS, (2, 1))
    s = PeakonState([1.0, 0.0], [2.0, 3.0], sector)
    assert sector.tag == "S_minus_perm"
    canonical = s.relabeled()
    np.testing.assert_array_equal(canonical.q, [0.0, 1.0])
    np.testing.assert_array_equal(canonical.p, [3.0, 2.0])
    assert not canonical.sector.is_permuted


def test_identity_permutation_is_not_permuted():
    assert Sector(SectorKind.S_PLUS, (1, 2, 3)).tag == "S_plus"


def test_bad_permutation():
    with pytest.raises(SectorError):
        Sector(SectorKind.S_MINUS, (1, 1))
    with pytest.raises(SectorError):
        sector_from_tag("S_plus_perm")
    with pytest.raises(SectorError):
        sector_from_tag("S_sideways")


def test_flow_sign_pairing():
    assert S_MINUS.flow_sign is FlowSign.MINUS
    assert S_PLUS.flow_sign is FlowSign.PLUS
    assert FlowSign.MINUS.factor == -1.0


def test_reversed_swaps_kind(n2_minus):
    flipped = n2_minus.reversed()
    assert flipped.sector.kind is SectorKind.S_PLUS
    np.testing.assert_array_equal(flipped.q, [1.0, -1.0])


def test_min_gap_and_translation(n2_minus):
    assert n2_minus.min_gap() == 2.0
    moved = n2_minus.translated(3.0)
    np.testing.assert_array_equal(moved.q, [2.0, 4.0])
    assert PeakonState([0.0], [1.0]).min_gap() == float("inf")


def test_geometric_state_profile():
    s = geometric_state(4, C=2.0, r=0.5, d=1.5, sector=S_PLUS, q0=1.0)
    np.testing.assert_allclose(s.p, [1.0, 0.5, 0.25, 0.125])
    np.testing.assert_allclose(s.q, [1.0, -0.5, -2.0, -3.5])


def test_geometric_state_permuted():
    sector = Sector(SectorKind.S_MINUS, (3, 1, 2))
    s = geometric_state(3, C=1.0, r=0.5, d=1.0, sector=sector)
    q, p = s.canonical_arrays()
    np.testing.assert_allclose(q, [0.0, 1.0, 2.0])
    np.testing.assert_allclose(p, [0.5, 0.25, 0.125])


def test_random_state_is_seeded():
    a = random_state(5, np.random.default_rng(7), sector=S_PLUS)
    b = random_state(5, np.random.default_rng(7), sector=S_PLUS)
    np.testing.assert_array_equal(a.q, b.q)
    np.testing.assert_array_equal(a.p, b.p)
    assert a.min_gap() >= 0.5


def test_tail_bound():
    assert tail_bound(1.0, 0.5, 3) == pytest.approx(0.0625 / 0.5)
    with pytest.raises(SectorError):
        tail_bound(1.0, 1.0, 3)


def test_state_to_dict(n2_plus):
    data = n2_plus.to_dict()
    assert data["n"] == 2
    assert data["sector"]["tag"] == "S_plus"
