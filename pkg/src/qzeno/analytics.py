"""Closed-form results on the infinite lattice with an absorber at the origin."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate

from .numerics import bessel_j


@dataclass(frozen=True)
class AsymptoticParams:
    tau: float
    gamma: float = 1.0
    a: int = 0

    def __post_init__(self):
        if self.tau <= 0 or self.gamma <= 0:
            raise ValueError("tau and gamma must be positive")

    @property
    def Gamma(self) -> float:
        return 2.0 / self.tau


def pn_asymptotic_origin(n, gamma: float, tau: float):
    """Long-time first-detection probability for a particle starting on the detector.

    ``p_n ~ 4 gamma tau / (pi n^3) * cos^2(2 gamma tau n + pi/4)``
    """
    n = np.asarray(n, dtype=float)
    if np.any(n < 1):
        raise ValueError("n must be >= 1")
    return 4.0 * gamma * tau / (np.pi * n**3) * np.cos(2.0 * gamma * tau * n + np.pi / 4.0) ** 2


def pn_envelope_origin(n, gamma: float, tau: float):
    return 4.0 * gamma * tau / (np.pi * np.asarray(n, dtype=float) ** 3)


def laplace_psi0(s, Gamma: float, a: int):
    """Laplace transform of the detector amplitude, principal square-root branch.

    ``psi0~(s) = (i (sqrt(s^2+4) - s) / 2)^|a| / (Gamma + sqrt(s^2+4))`` for the
    chain with hopping ``-1`` used throughout the package. The variant with
    ``((sqrt(s^2+4) - s) / 2i)^a`` belongs to hopping ``+1``; the two differ by
    the gauge factor ``(-1)^a`` and give identical probabilities.
    """
    s = np.asarray(s, dtype=complex)
    if np.any(s.real <= 0):
        raise ValueError("need Re(s) > 0")
    r = np.sqrt(s * s + 4.0)
    return (0.5j * (r - s)) ** abs(int(a)) / (Gamma + r)


def fourier_laplace_psi(q, s, Gamma: float, a: int):
    """Fourier-Laplace transform ``sum_x int dt psi_x(t) e^{iqx - st}`` for a start at ``a``."""
    q = np.asarray(q, dtype=float)
    return 1j * (np.exp(1j * q * a) - Gamma * laplace_psi0(s, Gamma, a)) / (1j * s + 2.0 * np.cos(q))


class DetectionDensity(NamedTuple):
    bessel: np.ndarray
    asymptotic: np.ndarray


def pt_asymptotic(t, a: int, tau: float) -> DetectionDensity:
    """Detection-time density for a start at ``a != 0`` in the strong-absorber limit.

    Returns the Bessel form ``2 a^2/Gamma * J_a(2t)^2 / t^2`` (``Gamma = 2/tau``)
    and its large-time limit ``tau a^2/pi * cos^2(2t - a pi/2 - pi/4) / t^3``.
    """
    if a == 0:
        raise ValueError("a = 0 is handled by p0_asymptotic")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    a_abs = abs(int(a))
    Gamma = 2.0 / tau
    bessel = 2.0 * a_abs**2 / Gamma * np.asarray(bessel_j(a_abs, 2.0 * t)) ** 2 / t**2
    asym = tau * a_abs**2 / np.pi * np.cos(2.0 * t - a_abs * np.pi / 2.0 - np.pi / 4.0) ** 2 / t**3
    return DetectionDensity(bessel, asym)


def p0_asymptotic(t, tau: float):
    """Detection-time density for a start on the detector, leading order in tau."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    return 4.0 * tau**3 / np.pi * np.cos(2.0 * t + np.pi / 4.0) ** 2 / t**3


def p0_discrete(n, tau: float):
    """``p_n = tau * p0(n tau)``: per-measurement probability from the density."""
    return tau * p0_asymptotic(np.asarray(n, dtype=float) * tau, tau)


@dataclass(frozen=True)
class BootstrapState:
    """State just after the first measurement for a start on the detector.

    Amplitudes are keyed by site; to first order in tau only the neighbours
    of the origin are populated.
    """

    tau: float
    amplitudes: dict

    @property
    def norm2(self) -> float:
        return float(sum(abs(v) ** 2 for v in self.amplitudes.values()))

    @property
    def prefactor(self) -> float:
        """Factor relating the two densities, ``p0(t) = prefactor * p1(t)``."""
        return 4.0 * self.tau**2

    def to_vector(self, model) -> np.ndarray:
        psi = np.zeros(model.size, dtype=complex)
        for x, amp in self.amplitudes.items():
            psi[model.index(x)] = amp
        return psi


def bootstrap_a0_state(tau: float) -> BootstrapState:
    if tau <= 0:
        raise ValueError("tau must be positive")
    return BootstrapState(tau, {-1: -1j * tau, 1: -1j * tau})


def survival_limit(a: int, Gamma: float) -> float:
    """Infinite-time survival ``1 - 2 Gamma int |psi_0(t)|^2 dt`` via Parseval.

    The time integral equals ``(1/2pi) int |psi0~(i w)|^2 dw``; outside the band
    ``|w| > 2`` the integrand decays like ``1/w^2``.
    """

    def f(w):
        s = 1e-14 + 1j * w
        return abs(complex(laplace_psi0(s, Gamma, a))) ** 2

    band = integrate.quad(f, -2.0, 2.0, limit=400, epsabs=1e-14, epsrel=1e-12)[0]
    tail = integrate.quad(f, 2.0, np.inf, limit=400, epsabs=1e-14, epsrel=1e-12)[0]
    absorbed = Gamma / np.pi * (band + 2.0 * tail)
    return 1.0 - absorbed
