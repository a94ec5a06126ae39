import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qzeno.model import (GOLDEN_RATIO, AAHPotential, LatticeModel, MeasurementProtocol,
                         build_hamiltonian, build_projector, localized_state)


def test_free_hamiltonian_entries():
    H = build_hamiltonian(LatticeModel(3, gamma=0.7)).to_dense()
    assert H.shape == (7, 7)
    assert np.allclose(np.diag(H), 0)
    assert np.allclose(np.diag(H, 1), -0.7)
    assert np.allclose(H, H.T)
    assert np.count_nonzero(H) == 12


def test_aah_potential_uses_absolute_site_label():
    small = LatticeModel.aah(5, 1.5, phase=0.3)
    big = LatticeModel.aah(40, 1.5, phase=0.3)
    d_small = build_hamiltonian(small).diagonal
    d_big = build_hamiltonian(big).diagonal
    assert np.array_equal(d_small, d_big[big.index(-5):big.index(5) + 1])
    x = np.arange(-5, 6)
    assert np.allclose(d_small, 1.5 * np.cos(2 * np.pi * x * GOLDEN_RATIO + 0.3), atol=0, rtol=1e-15)


def test_site_indexing():
    m = LatticeModel(4)
    assert m.size == 9 and m.L == 4
    assert m.index(0) == 4 and m.index(-4) == 0 and m.index(4) == 8
    assert list(m.sites) == list(range(-4, 5))
    with pytest.raises(ValueError):
        m.index(5)


@given(st.integers(1, 30), st.data())
def test_projector_idempotent_and_kills_detector(L, data):
    m = LatticeModel(L)
    site = data.draw(st.integers(-L, L))
    B = build_projector(m, site)
    r = np.random.default_rng(L).normal(size=m.size) + 0j
    once = B(r)
    assert np.array_equal(B(once), once)
    assert once[m.index(site)] == 0
    D = B.to_dense()
    assert np.array_equal(D @ D, D)
    assert np.allclose(D @ r, once)


def test_localized_state_is_unit_vector():
    psi = localized_state(LatticeModel(6), -2)
    assert psi.dtype == complex
    assert np.linalg.norm(psi) == 1.0 and psi[4] == 1.0


def test_invalid_parameters():
    with pytest.raises(ValueError):
        LatticeModel(-1)
    with pytest.raises(ValueError):
        LatticeModel(3, gamma=-1.0)
    with pytest.raises(ValueError):
        AAHPotential(-0.1)
    with pytest.raises(ValueError):
        MeasurementProtocol(0.0, 10)
    with pytest.raises(ValueError):
        MeasurementProtocol(0.1, 0)
    with pytest.raises(ValueError):
        build_projector(LatticeModel(2), 3)


def test_zero_hopping_is_allowed():
    H = build_hamiltonian(LatticeModel(2, gamma=0.0)).to_dense()
    assert np.count_nonzero(H) == 0
