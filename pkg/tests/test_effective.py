import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qzeno.effective import (build_heff1, build_heff2, perturbative_residuals,
                             perturbative_spectrum, survival_nh1_closed_form,
                             survival_nh1_diagonal, survival_nh1_numerical, survival_nh2,
                             wavefunction_nh1)
from qzeno.model import LatticeModel, MeasurementProtocol
from qzeno.numerics import expm_apply_oracle
from qzeno.stroboscopic import run_stroboscopic


def test_heff1_structure():
    H = build_heff1(4, 0.2)
    M = H.to_dense()
    assert M.shape == (8, 8)
    assert H.hermitian.to_dense()[3, 4] == 0  # no hopping bond between sites -1 and 1
    assert np.allclose(M, M.T)  # complex symmetric
    i1, im1 = H.index(1), H.index(-1)
    assert M[i1, i1] == -0.1j and M[i1, im1] == -0.1j
    v = np.arange(8) + 1j
    assert np.allclose(H.matvec(v), M @ v)
    with pytest.raises(ValueError):
        H.index(0)


def test_heff2_structure():
    H = build_heff2(3, 0.1)
    assert H.Gamma == 20.0
    M = H.to_dense()
    assert M[3, 3] == -20j and np.count_nonzero(np.diag(M)) == 1
    aah = build_heff2(3, 0.1, Gamma=5.0, model=LatticeModel.aah(3, 1.0))
    assert aah.to_dense()[3, 3] == 1.0 - 5j


@pytest.mark.parametrize("L", [1, 7, 50, 200])
def test_decay_rates_closed_form_and_sum_rule(L):
    tau = 0.1
    spec = perturbative_spectrum(L, tau)
    k = np.arange(1, L + 1)
    beta = 2 * tau / (L + 1) * np.sin(k * np.pi / (L + 1)) ** 2
    assert np.max(np.abs(spec.decay_rates - beta)) < 1e-12
    assert abs(spec.decay_rates.sum() - tau) < 1e-10
    # frozen: L=10 lowest rates
    if L == 7:
        assert np.allclose(spec.energies, -2 * np.cos(k * np.pi / 8), atol=1e-15)


def test_frozen_decay_rates_L10():
    spec = perturbative_spectrum(10, 0.1)
    assert np.allclose(spec.decay_rates[:3], [0.00144315, 0.00531441, 0.01038468], atol=5e-9)


def test_symmetric_modes_are_exact():
    spec = perturbative_spectrum(12, 0.3)
    M = build_heff1(12, 0.3).to_dense()
    R = M @ spec.psi_plus - spec.psi_plus * spec.energies
    assert np.max(np.abs(R)) < 1e-13


def test_residual_scales_quadratically():
    taus = np.array([0.05, 0.1, 0.2])
    res = [perturbative_residuals(perturbative_spectrum(50, t)).max() for t in taus]
    slope = np.polyfit(np.log(taus), np.log(res), 1)[0]
    assert abs(slope - 2.0) < 0.2


def test_closed_form_starts_from_initial_site():
    spec = perturbative_spectrum(10, 0.1)
    psi = wavefunction_nh1(spec, 3, [0.0])[0]
    expected = np.zeros(20)
    expected[spec.sites == 3] = 1
    assert np.max(np.abs(psi - expected)) < 0.02  # first-order accuracy


def test_closed_form_vs_dense_propagation():
    t = np.array([1.0, 10.0, 100.0, 1000.0])
    a = survival_nh1_closed_form(20, 0.1, 1, t)
    b = survival_nh1_numerical(20, 0.1, 1, t)
    assert np.max(np.abs(a - b)) < 5e-3


def test_nh1_long_time_limit_is_one_half():
    # the symmetric half of the wave function never feels the absorber
    for a in (1, 4):
        assert abs(survival_nh1_closed_form(50, 0.1, a, [1e8])[0] - 0.5) < 1e-6


def test_nh1_tracks_stroboscopic_dynamics():
    n = np.arange(1, 2001)
    strobo = run_stroboscopic(LatticeModel(50), MeasurementProtocol(0.1, 2000), 1)
    nh1 = survival_nh1_closed_form(50, 0.1, 1, n * 0.1)
    assert np.max(np.abs(strobo.S - nh1)) < 0.02


def test_nh2_flux_matches_norm_and_oracle():
    res = survival_nh2(2, 0.1, 1, 50, tol=1e-11)
    assert np.max(np.abs(res.S - res.S_flux)) < 1e-8
    M = build_heff2(2, 0.1).to_dense()
    psi0 = np.zeros(5, dtype=complex)
    psi0[3] = 1
    for i in (0, 9, 49):
        ref = np.linalg.norm(expm_apply_oracle(M, res.t[i], psi0)) ** 2
        assert abs(res.S[i] - ref) < 1e-8
    ser = res.as_series()
    assert np.all(ser.p >= -1e-12) and abs(ser.S[-1] + ser.p.sum() - 1) < 1e-12


@settings(max_examples=10, deadline=None)
@given(st.integers(1, 6), st.floats(0.05, 1.0), st.data())
def test_nh2_norm_is_monotone(L, tau, data):
    a = data.draw(st.integers(-L, L))
    res = survival_nh2(L, tau, a, 30)
    assert np.all(np.diff(res.S) <= 1e-10)


def test_input_validation():
    with pytest.raises(ValueError):
        build_heff1(0, 0.1)
    with pytest.raises(ValueError):
        build_heff2(3, -0.1)
    with pytest.raises(ValueError):
        build_heff2(3, 0.1, Gamma=-1.0)
    with pytest.raises(ValueError):
        wavefunction_nh1(perturbative_spectrum(3, 0.1), 0, [1.0])
    with pytest.raises(ValueError):
        survival_nh1_numerical(60, 0.1, 1, [1.0])


def test_diagonal_mode_sum_accuracy():
    # measured: early-time error linear in tau, late-time error tiny
    t = np.geomspace(0.1, 1e6, 300)
    early, late = [], []
    for tau in (0.05, 0.1, 0.2):
        d = np.abs(survival_nh1_diagonal(50, tau, 1, t) - survival_nh1_closed_form(50, tau, 1, t))
        early.append(d.max())
        late.append(d[t > 1e4].max())
    slope = np.polyfit(np.log([0.05, 0.1, 0.2]), np.log(early), 1)[0]
    assert abs(slope - 1.0) < 0.1
    assert max(late) < 1e-5
