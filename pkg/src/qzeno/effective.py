"""Effective non-Hermitian Hamiltonians for the detection dynamics.

Mapping 1 lives on the 2L sites without the detector (ordered -L..-1, 1..L)
and couples the two half-chains through a weak rank-one absorber of strength
``tau/2`` on sites +-1. Mapping 2 keeps all 2L+1 sites and places an on-site
absorber ``-i Gamma`` with ``Gamma = 2/tau`` at the detector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import LatticeModel, build_hamiltonian, localized_state
from .numerics import (
    ComplexTridiagonalOperator,
    TridiagonalOperator,
    dopri5,
    expm,
)
from .stroboscopic import DetectionSeries


@dataclass(frozen=True)
class EffectiveHamiltonian1:
    L: int
    tau: float
    hermitian: TridiagonalOperator

    @property
    def sites(self) -> np.ndarray:
        return np.concatenate((np.arange(-self.L, 0), np.arange(1, self.L + 1)))

    def index(self, x: int) -> int:
        if x == 0 or abs(x) > self.L:
            raise ValueError(f"site {x} is not part of the 2L-site lattice")
        return x + self.L if x < 0 else x + self.L - 1

    @property
    def coupling(self) -> np.ndarray:
        """Vector ``u = |1> + |-1>``; the absorber is ``-(i tau/2) u u^T``."""
        u = np.zeros(2 * self.L)
        u[self.L - 1] = u[self.L] = 1.0
        return u

    def matvec(self, v: np.ndarray) -> np.ndarray:
        u = self.coupling
        return self.hermitian.matvec(np.asarray(v, dtype=complex)) - 0.5j * self.tau * u * (u @ v)

    def to_dense(self) -> np.ndarray:
        u = self.coupling
        return self.hermitian.to_dense() - 0.5j * self.tau * np.outer(u, u)


@dataclass(frozen=True)
class EffectiveHamiltonian2:
    L: int
    tau: float
    operator: ComplexTridiagonalOperator
    Gamma: float

    def to_dense(self) -> np.ndarray:
        return self.operator.to_dense()


def build_heff1(L: int, tau: float) -> EffectiveHamiltonian1:
    if L < 1 or tau <= 0:
        raise ValueError("need L >= 1 and tau > 0")
    off = -np.ones(2 * L - 1)
    off[L - 1] = 0.0  # no bond across the removed origin
    return EffectiveHamiltonian1(L, tau, TridiagonalOperator(np.zeros(2 * L), off))


def build_heff2(L: int, tau: float, Gamma: float | None = None, model: LatticeModel | None = None) -> EffectiveHamiltonian2:
    """Free chain (or ``model``'s Hamiltonian) plus ``-i Gamma`` at the origin."""
    if L < 1 or tau <= 0:
        raise ValueError("need L >= 1 and tau > 0")
    Gamma = 2.0 / tau if Gamma is None else float(Gamma)
    if Gamma < 0:
        raise ValueError("Gamma must be non-negative")
    H = build_hamiltonian(model if model is not None else LatticeModel(L))
    diag = H.diagonal.astype(complex)
    diag[L] -= 1j * Gamma
    return EffectiveHamiltonian2(L, tau, ComplexTridiagonalOperator(diag, H.off_diagonal), Gamma)


@dataclass(frozen=True)
class PerturbativeSpectrum:
    """First-order eigen-system of mapping 1.

    Columns ``k-1`` of ``psi_plus``/``psi_minus`` hold the eigenvectors for
    mode ``k``; ``psi_plus`` are exact with energy ``e_k``, ``psi_minus`` carry
    ``e_k - i beta_k``.
    """

    L: int
    tau: float
    energies: np.ndarray
    decay_rates: np.ndarray
    phi_left: np.ndarray
    phi_right: np.ndarray
    psi_plus: np.ndarray
    psi_minus: np.ndarray

    @property
    def sites(self) -> np.ndarray:
        return np.concatenate((np.arange(-self.L, 0), np.arange(1, self.L + 1)))

    @property
    def eigenvalues_minus(self) -> np.ndarray:
        return self.energies - 1j * self.decay_rates


def perturbative_spectrum(L: int, tau: float) -> PerturbativeSpectrum:
    """Build the symmetric/antisymmetric eigenvectors of mapping 1 to first order in tau.

    The antisymmetric states are corrected by mixing in the other
    antisymmetric states, ``sum_{k' != k} <k'|V|k> / (e_k - e_k')``; the
    symmetric states are left untouched because the absorber annihilates them.
    Accuracy claims hold for tau <= 0.2.
    """
    if L < 1 or tau <= 0:
        raise ValueError("need L >= 1 and tau > 0")
    k = np.arange(1, L + 1)
    theta = k * np.pi / (L + 1)
    e = -2.0 * np.cos(theta)
    beta = 2.0 * tau / (L + 1) * np.sin(theta) ** 2
    x = np.concatenate((np.arange(-L, 0), np.arange(1, L + 1)))
    wave = np.sqrt(2.0 / (L + 1)) * np.sin(np.outer(x, theta))
    phi_l = np.where(x[:, None] < 0, wave, 0.0)
    phi_r = np.where(x[:, None] > 0, wave, 0.0)
    phi_p = (phi_l + phi_r) / np.sqrt(2.0)
    phi_m = (phi_l - phi_r) / np.sqrt(2.0)

    u = np.zeros(2 * L)
    u[L - 1] = u[L] = 1.0
    # within each degenerate pair the absorber must already be diagonal
    if np.abs(u @ phi_p).max() > 1e-12:
        raise ArithmeticError("absorber couples the symmetric states; basis is not adapted")
    um = u @ phi_m
    V = -0.5j * tau * np.outer(um, um)  # V[k', k] = <phi-_k'|V|phi-_k>
    if not np.allclose(np.diag(V), -1j * beta, rtol=1e-12, atol=1e-15):
        raise ArithmeticError("diagonal absorber elements disagree with the closed-form decay rates")
    gap = e[None, :] - e[:, None]  # e_k - e_k'
    np.fill_diagonal(gap, 1.0)
    mix = V / gap
    np.fill_diagonal(mix, 0.0)
    psi_m = phi_m + phi_m @ mix
    return PerturbativeSpectrum(L, tau, e, beta, phi_l, phi_r, phi_p, psi_m)


def perturbative_residuals(spec: PerturbativeSpectrum) -> np.ndarray:
    """``|H_eff psi_k - lambda_k psi_k| / |psi_k|`` for each antisymmetric mode (second order in tau)."""
    M = build_heff1(spec.L, spec.tau).to_dense()
    R = M @ spec.psi_minus - spec.psi_minus * spec.eigenvalues_minus
    return np.linalg.norm(R, axis=0) / np.linalg.norm(spec.psi_minus, axis=0)


def wavefunction_nh1(spec: PerturbativeSpectrum, a: int, times) -> np.ndarray:
    """Rows: ``psi(x, t)`` for each time, assembled from the perturbative modes."""
    if a == 0 or abs(a) > spec.L:
        raise ValueError("initial site must be a non-zero site of the 2L-site lattice")
    ia = a + spec.L if a < 0 else a + spec.L - 1
    t = np.atleast_1d(np.asarray(times, dtype=float))
    phase = np.exp(-1j * np.outer(t, spec.energies))
    plus = (phase * spec.psi_plus[ia]) @ spec.psi_plus.T
    decay = np.exp(-np.outer(t, spec.decay_rates))
    minus = (phase * decay * spec.psi_minus[ia]) @ spec.psi_minus.T
    return plus + minus


def survival_nh1_closed_form(L: int, tau: float, a: int, times, chunk: int = 4096) -> np.ndarray:
    """``S(t) = sum_x |psi(x, t)|^2`` from the first-order closed form."""
    spec = perturbative_spectrum(L, tau)
    t = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.empty(t.size)
    for s in range(0, t.size, chunk):
        psi = wavefunction_nh1(spec, a, t[s:s + chunk])
        out[s:s + chunk] = np.sum(np.abs(psi) ** 2, axis=1)
    return out


def survival_nh1_diagonal(L: int, tau: float, a: int, times) -> np.ndarray:
    """Mode-sum ``sum_r exp(-2 q_r t) |<psi_r|a>|^2`` without cross terms.

    Treats the perturbative eigenvectors as orthonormal. They are
    biorthogonal to O(tau^2) but their Hermitian overlaps are O(tau), so the
    dropped interference terms cost O(tau) at times t ~ 1; once the phases
    dephase (t >> L) the two forms agree closely.
    """
    spec = perturbative_spectrum(L, tau)
    if a == 0 or abs(a) > L:
        raise ValueError("initial site must be a non-zero site of the 2L-site lattice")
    ia = a + L if a < 0 else a + L - 1
    t = np.atleast_1d(np.asarray(times, dtype=float))
    w_plus = np.sum(np.abs(spec.psi_plus[ia]) ** 2)
    w_minus = np.abs(spec.psi_minus[ia]) ** 2
    return w_plus + np.exp(-2.0 * np.outer(t, spec.decay_rates)) @ w_minus


def survival_nh1_numerical(L: int, tau: float, a: int, times) -> np.ndarray:
    """Cross-check of the closed form: exact ``exp(-i H_eff t)`` on the dense matrix (L <= 50)."""
    if L > 50:
        raise ValueError("dense cross-check limited to L <= 50")
    H = build_heff1(L, tau)
    psi0 = np.zeros(2 * L, dtype=complex)
    psi0[H.index(a)] = 1.0
    M = H.to_dense()
    return np.array([np.linalg.norm(expm(-1j * t * M) @ psi0) ** 2 for t in np.atleast_1d(times)])


@dataclass
class NH2Result:
    """Propagation under mapping 2 sampled at ``t = n tau``.

    ``S`` is the norm, ``S_flux`` is ``1 - 2 Gamma * int |psi_0|^2`` and
    ``density`` the detection-time density ``2 Gamma |psi_0(t)|^2``.
    """

    tau: float
    Gamma: float
    n: np.ndarray
    t: np.ndarray
    S: np.ndarray
    S_flux: np.ndarray
    density: np.ndarray
    sites: int
    a: int

    def as_series(self) -> DetectionSeries:
        S_prev = np.concatenate(([1.0], self.S[:-1]))
        p = S_prev - self.S
        return DetectionSeries(self.tau, self.n, self.S, p, sites=self.sites,
                               meta={"a": self.a, "Gamma": self.Gamma, "kind": "nh2"})


def survival_nh2(L: int, tau: float, a: int, n_max: int, Gamma: float | None = None,
                 tol: float = 1e-9, model: LatticeModel | None = None) -> NH2Result:
    """Propagate ``|a>`` under mapping 2 and record at ``t = n tau``, n = 1..n_max.

    The absorbed probability ``2 Gamma int |psi_0|^2 dt`` is integrated as an
    extra component of the same adaptive Runge-Kutta system, so the flux and
    norm routes share one error control.
    """
    H = build_heff2(L, tau, Gamma, model)
    op = H.operator
    G = H.Gamma
    N = op.size
    psi0 = localized_state(model if model is not None else LatticeModel(L), a)
    y0 = np.concatenate((psi0, [0.0]))

    def rhs(y):
        dy = np.empty_like(y)
        dy[:N] = -1j * op.matvec(y[:N])
        dy[N] = 2.0 * G * abs(y[L]) ** 2
        return dy

    n = np.arange(1, n_max + 1)
    t = n * tau
    S = np.empty(n_max)
    absorbed = np.empty(n_max)
    dens = np.empty(n_max)
    for i, y in enumerate(dopri5(rhs, y0, t, rtol=tol, atol=tol * 1e-3)):
        S[i] = np.vdot(y[:N], y[:N]).real
        absorbed[i] = y[N].real
        dens[i] = 2.0 * G * abs(y[L]) ** 2
    return NH2Result(tau, G, n, t, S, 1.0 - absorbed, dens, N, a)
