import numpy as np
import pytest
import scipy.linalg
import scipy.special
from hypothesis import given, settings
from hypothesis import strategies as st

from qzeno.errors import ConvergenceError, PropagationError
from qzeno.numerics import (QL_MAX_SIZE, ComplexTridiagonalOperator, TridiagonalOperator,
                            bessel_j, dopri5, eig_tridiagonal, expm, expm_apply_oracle,
                            propagate_nonhermitian, propagate_nonhermitian_grid, tql_implicit)


def chain(N, gamma=1.0):
    return TridiagonalOperator(np.zeros(N), -gamma * np.ones(N - 1))


# --- tridiagonal eigensolver ---------------------------------------------------

def test_free_chain_spectrum_closed_form():
    N = 101
    spec = eig_tridiagonal(chain(N), method="ql")
    k = np.arange(1, N + 1)
    exact = np.sort(-2.0 * np.cos(k * np.pi / (N + 1)))
    assert np.max(np.abs(spec.eigenvalues - exact)) < 1e-12


def test_eigen_residual_and_orthonormality(rng):
    N = 120
    op = TridiagonalOperator(rng.normal(size=N), rng.normal(size=N - 1))
    spec = eig_tridiagonal(op, method="ql")
    H = op.to_dense()
    V, lam = spec.eigenvectors, spec.eigenvalues
    assert np.max(np.abs(H @ V - V * lam)) < 1e-11
    assert np.max(np.abs(V.T @ V - np.eye(N))) < 1e-12
    assert np.all(np.diff(lam) >= 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 60), st.integers(0, 2**31))
def test_ql_matches_lapack(N, seed):
    r = np.random.default_rng(seed)
    op = TridiagonalOperator(r.uniform(-3, 3, N), r.uniform(-1, 1, N - 1))
    a = eig_tridiagonal(op, method="ql")
    b = eig_tridiagonal(op, method="lapack")
    assert np.allclose(a.eigenvalues, b.eigenvalues, atol=1e-11)
    assert np.allclose(a.eigenvalues, np.linalg.eigvalsh(op.to_dense()), atol=1e-11)


def test_sign_convention_makes_eigenvectors_comparable(rng):
    op = TridiagonalOperator(rng.normal(size=30), rng.normal(size=29))
    a = eig_tridiagonal(op, method="ql").eigenvectors
    b = eig_tridiagonal(op, method="lapack").eigenvectors
    assert np.max(np.abs(a - b)) < 1e-9


def test_auto_uses_lapack_above_threshold():
    op = chain(QL_MAX_SIZE + 1)
    spec = eig_tridiagonal(op)
    k = np.arange(1, op.size + 1)
    assert np.allclose(spec.eigenvalues, np.sort(-2 * np.cos(k * np.pi / (op.size + 1))), atol=1e-12)


def test_ql_reports_non_convergence():
    d, e = np.zeros(40), np.ones(39)
    with pytest.raises(ConvergenceError):
        tql_implicit(d, e, max_iter=1)


def test_operator_shape_checks():
    with pytest.raises(ValueError):
        TridiagonalOperator(np.zeros(3), np.zeros(3))
    with pytest.raises(ValueError):
        ComplexTridiagonalOperator(np.array([0, 1j, 0]), np.ones(2))


def test_spectral_evolution_is_unitary(rng):
    spec = eig_tridiagonal(chain(31))
    psi = rng.normal(size=31) + 1j * rng.normal(size=31)
    psi /= np.linalg.norm(psi)
    assert abs(np.linalg.norm(spec.evolve(psi, 7.3)) - 1) < 1e-13
    U = spec.propagator(0.4)
    assert np.allclose(U @ U.conj().T, np.eye(31), atol=1e-13)


# --- matrix exponential -------------------------------------------------------

@pytest.mark.parametrize("scale", [1e-3, 0.5, 3.0, 40.0])
def test_expm_matches_scipy(rng, scale):
    M = scale * (rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12)))
    ref = scipy.linalg.expm(M)
    assert np.max(np.abs(expm(M) - ref)) <= 1e-12 * max(1.0, np.max(np.abs(ref)))


def test_expm_elementary_cases():
    assert np.max(np.abs(expm(np.zeros((4, 4))) - np.eye(4))) < 1e-15
    D = np.diag([0.5, -1.0, 2.0])
    assert np.allclose(expm(D), np.diag(np.exp([0.5, -1.0, 2.0])), rtol=1e-14)
    # rotation generator
    R = expm(np.array([[0.0, -1.0], [1.0, 0.0]]) * np.pi / 3)
    assert np.allclose(R, [[0.5, -np.sqrt(3) / 2], [np.sqrt(3) / 2, 0.5]], atol=1e-15)
    with pytest.raises(ValueError):
        expm(np.zeros((2, 3)))


def test_oracle_dimension_mismatch():
    with pytest.raises(ValueError):
        expm_apply_oracle(np.eye(3), 1.0, np.ones(4))


# --- adaptive Runge-Kutta -----------------------------------------------------

def test_dopri5_exponential_decay():
    times = np.linspace(0, 5, 11)
    ys = np.array([y[0] for y in dopri5(lambda y: -y, np.array([1.0]), times, rtol=1e-10, atol=1e-13)])
    assert np.max(np.abs(ys - np.exp(-times))) < 1e-9


def test_dopri5_blowup_raises():
    with pytest.raises(PropagationError):
        list(dopri5(lambda y: y**2, np.array([1.0]), [2.0], rtol=1e-8, atol=1e-10))


@pytest.mark.parametrize("N,Gamma", [(5, 20.0), (7, 2.0), (9, 0.5)])
def test_nonhermitian_propagation_matches_oracle(rng, N, Gamma):
    d = np.zeros(N, dtype=complex)
    d[N // 2] = -1j * Gamma
    op = ComplexTridiagonalOperator(d, -np.ones(N - 1))
    psi = rng.normal(size=N) + 1j * rng.normal(size=N)
    psi /= np.linalg.norm(psi)
    for t in (0.3, 1.0, 5.0):
        got = propagate_nonhermitian(op, psi, t, tol=1e-11)
        ref = expm_apply_oracle(op.to_dense(), t, psi)
        assert np.max(np.abs(got - ref)) < 1e-8


def test_nonhermitian_norm_decays():
    d = np.zeros(11, dtype=complex)
    d[5] = -4j
    op = ComplexTridiagonalOperator(d, -np.ones(10))
    psi = np.zeros(11, dtype=complex)
    psi[3] = 1
    out = propagate_nonhermitian_grid(op, psi, np.linspace(0.5, 10, 20))
    norms = np.linalg.norm(out, axis=1)
    assert np.all(np.diff(norms) <= 1e-12)


# --- Bessel functions ---------------------------------------------------------

def test_bessel_frozen_values():
    # reference values from an independent implementation
    assert abs(float(bessel_j(0, 1.0)) - 0.7651976865579666) < 1e-14
    assert abs(float(bessel_j(5, 10.0)) - (-0.2340615281867936)) < 1e-13
    assert abs(float(bessel_j(10, 2000.0)) - (-0.006686998169489761)) < 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 60), st.floats(0.0, 3000.0))
def test_bessel_matches_scipy(order, x):
    assert abs(float(bessel_j(order, x)) - scipy.special.jv(order, x)) < 1e-11


def test_bessel_recurrence_identity():
    x = np.linspace(0.1, 50, 200)
    for a in (1, 4, 20):
        lhs = bessel_j(a - 1, x) + bessel_j(a + 1, x)
        assert np.max(np.abs(lhs - 2 * a / x * bessel_j(a, x))) < 1e-12


def test_bessel_rejects_bad_input():
    with pytest.raises(ValueError):
        bessel_j(-1, 1.0)
    with pytest.raises(ValueError):
        bessel_j(1, -1.0)
