"""Lattice models, the detector projection and localized initial states.

Sites are labelled x = -L..L and stored at array index x + L, so the
quasi-periodic potential depends on the absolute site label only and two
lattices of different size share it on their common sites.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import TridiagonalOperator

GOLDEN_RATIO = (np.sqrt(5.0) + 1.0) / 2.0


@dataclass(frozen=True)
class AAHPotential:
    amplitude: float
    sigma: float = GOLDEN_RATIO
    phase: float = 0.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("AAH amplitude must be non-negative")

    def __call__(self, x):
        return self.amplitude * np.cos(2.0 * np.pi * np.asarray(x) * self.sigma + self.phase)


@dataclass(frozen=True)
class LatticeModel:
    """Open chain of ``2L+1`` sites with hopping ``gamma`` and optional AAH potential."""

    half_length: int
    gamma: float = 1.0
    potential: AAHPotential | None = None

    def __post_init__(self):
        if int(self.half_length) != self.half_length or self.half_length < 0:
            raise ValueError("half_length must be a non-negative integer")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")

    @classmethod
    def aah(cls, half_length, amplitude, sigma=GOLDEN_RATIO, phase=0.0, gamma=1.0):
        return cls(half_length, gamma, AAHPotential(amplitude, sigma, phase))

    @property
    def L(self) -> int:
        return self.half_length

    @property
    def size(self) -> int:
        return 2 * self.half_length + 1

    @property
    def sites(self) -> np.ndarray:
        return np.arange(-self.half_length, self.half_length + 1)

    def index(self, x: int) -> int:
        if abs(x) > self.half_length:
            raise ValueError(f"site {x} outside lattice -{self.L}..{self.L}")
        return int(x) + self.half_length


@dataclass(frozen=True)
class MeasurementProtocol:
    tau: float
    n_max: int
    detector_site: int = 0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")


@dataclass(frozen=True)
class InitialState:
    a: int


def build_hamiltonian(model: LatticeModel) -> TridiagonalOperator:
    x = model.sites
    diag = np.zeros(model.size) if model.potential is None else model.potential(x)
    return TridiagonalOperator(diag, np.full(model.size - 1, -model.gamma))


@dataclass(frozen=True)
class Projector:
    """``B = I - |site><site|``: the "not detected" outcome at one site."""

    index: int
    size: int

    def apply(self, psi: np.ndarray) -> np.ndarray:
        out = np.array(psi, copy=True)
        out[self.index] = 0
        return out

    __call__ = apply

    def to_dense(self) -> np.ndarray:
        B = np.eye(self.size)
        B[self.index, self.index] = 0.0
        return B


def build_projector(model: LatticeModel, detector_site: int = 0) -> Projector:
    return Projector(model.index(detector_site), model.size)


def localized_state(model: LatticeModel, a: int) -> np.ndarray:
    psi = np.zeros(model.size, dtype=complex)
    psi[model.index(a)] = 1.0
    return psi
