"""Aubry-Andre-Harper lattice: free wave-packet spreading and detection statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FitError, WavefrontError
from .fitting import PowerLawFit, fit_detection, fit_power_law, log_bin_edges
from .model import LatticeModel, MeasurementProtocol, build_hamiltonian, localized_state
from .numerics import eig_tridiagonal
from .stroboscopic import DetectionSeries, run_stroboscopic

SCALINGS = ("ballistic", "diffusive", "none")


@dataclass
class SpreadingProfile:
    times: np.ndarray
    x: np.ndarray
    densities: np.ndarray  # (len(times), N)
    scaling: str

    def scaled_axis(self, i: int) -> np.ndarray:
        t = self.times[i]
        if self.scaling == "ballistic":
            return self.x / t
        if self.scaling == "diffusive":
            return self.x / np.sqrt(t)
        return self.x.astype(float)

    def scaled_density(self, i: int) -> np.ndarray:
        """Density per unit scaled coordinate (lattice spacing 1 maps to 1/t or 1/sqrt t)."""
        t = self.times[i]
        factor = {"ballistic": t, "diffusive": np.sqrt(t), "none": 1.0}[self.scaling]
        return self.densities[i] * factor

    def variance(self) -> np.ndarray:
        mean = self.densities @ self.x
        return self.densities @ self.x**2 - mean**2


def default_scaling(amplitude: float) -> str:
    if amplitude < 2:
        return "ballistic"
    if amplitude == 2:
        return "diffusive"
    return "none"


def aah_free_spreading(model: LatticeModel, times, a: int = 0, scaling: str | None = None,
                       margin: int = 10, edge_tol: float = 1e-6) -> SpreadingProfile:
    """Position distributions ``|psi_x(t)|^2`` under free evolution from site ``a``.

    Raises ``WavefrontError`` if, at the last time, more than ``edge_tol`` of
    the probability sits within ``margin`` sites of either boundary.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise ValueError("times must be positive and ascending")
    amp = 0.0 if model.potential is None else model.potential.amplitude
    scaling = default_scaling(amp) if scaling is None else scaling
    if scaling not in SCALINGS:
        raise ValueError(f"unknown scaling {scaling!r}")
    if model.size <= 2 * margin + 1:
        raise WavefrontError(f"lattice of {model.size} sites too small for a {margin}-site margin")
    spec = eig_tridiagonal(build_hamiltonian(model))
    c = spec.eigenvectors.T @ localized_state(model, a)
    phases = np.exp(-1j * np.outer(times, spec.eigenvalues))
    dens = np.abs((phases * c) @ spec.eigenvectors.T) ** 2
    edge = dens[-1, :margin].sum() + dens[-1, -margin:].sum()
    if edge > edge_tol:
        raise WavefrontError(
            f"probability {edge:.3g} within {margin} sites of the boundary at t={times[-1]:g}; enlarge the lattice"
        )
    return SpreadingProfile(times, model.sites, dens, scaling)


def scaled_l1_distance(profile: SpreadingProfile, i: int, j: int) -> float:
    """L1 distance between the cumulative distributions on the rescaled axis.

    Lattice-scale structure makes pointwise densities at different times live on
    different grids; the cumulative distributions share one axis and the
    distance needs no binning.
    """
    ui, uj = profile.scaled_axis(i), profile.scaled_axis(j)
    Fi, Fj = np.cumsum(profile.densities[i]), np.cumsum(profile.densities[j])
    grid = np.union1d(ui, uj)
    # right-continuous step functions evaluated on the merged breakpoints
    gi = Fi[np.clip(np.searchsorted(ui, grid, side="right") - 1, 0, None)] * (grid >= ui[0])
    gj = Fj[np.clip(np.searchsorted(uj, grid, side="right") - 1, 0, None)] * (grid >= uj[0])
    return float(np.sum(np.abs(gi - gj)[:-1] * np.diff(grid)))


def overlap_distance(profile: SpreadingProfile, i: int, j: int) -> float:
    """``1 - sum_x sqrt(P_i(x) P_j(x))``: zero for identical distributions."""
    return float(1.0 - np.sum(np.sqrt(profile.densities[i] * profile.densities[j])))


def overlap_end(small: DetectionSeries, large: DetectionSeries, rel_tol: float = 0.01) -> int:
    """Last ``n`` before the two survival curves first differ by more than ``rel_tol``."""
    if not np.array_equal(small.n, large.n):
        raise ValueError("series must be recorded at the same n")
    off = np.abs(small.S - large.S) > rel_tol * np.abs(large.S)
    if not off.any():
        return int(large.n[-1])
    k = int(np.argmax(off))
    if k == 0:
        raise FitError("survival curves disagree from the first measurement")
    return int(large.n[k - 1])


def arrival_peak(series: DetectionSeries, hi: int, bins_per_decade: int = 20) -> int:
    """Start of the log bin where the bin-averaged ``p_n`` is largest, within [1, hi]."""
    n_all = np.concatenate(([0], series.n))
    S_all = np.concatenate(([1.0], series.S))
    edges = log_bin_edges(1, hi, bins_per_decade)
    S_at = np.interp(edges - 1, n_all, S_all)
    means = -np.diff(S_at) / np.diff(edges)
    return int(edges[int(np.argmax(means))])


@dataclass
class AAHDetectionResult:
    amplitude: float
    sizes: list[int]
    series: dict
    overlap_ends: list[int]
    window: tuple[int, int]
    p_fit: PowerLawFit
    S_fit: PowerLawFit


def aah_detection_suite(amplitude: float, sizes, tau: float = 0.1, a: int = 10, n_max: int = 10**4,
                        phase: float = 0.0, method: str = "bin", agree_tol: float = 0.01,
                        window: tuple[int, int] | None = None) -> AAHDetectionResult:
    """Detection runs on several lattice sizes sharing one quasi-periodic potential.

    The fit window runs from the arrival peak of ``p_n`` to the end of the
    overlap between the two largest lattices, where ``S_n`` agrees within
    ``agree_tol``; an explicit ``window`` overrides this. The decay exponent
    of ``p_n`` and of ``S_n`` are fitted on the largest lattice.
    """
    sizes = sorted(int(s) for s in sizes)
    if len(set(sizes)) != len(sizes) or len(sizes) < 2:
        raise ValueError("need at least two distinct lattice sizes")
    if any(s % 2 == 0 for s in sizes):
        raise ValueError("lattice sizes must be odd")
    protocol = MeasurementProtocol(tau, n_max)
    series = {}
    for N in sizes:
        model = LatticeModel.aah((N - 1) // 2, amplitude, phase=phase)
        series[N] = run_stroboscopic(model, protocol, a, record="all")
    ends = [overlap_end(series[s], series[b], agree_tol) for s, b in zip(sizes[:-1], sizes[1:])]
    big = series[sizes[-1]]
    if window is None:
        end = ends[-1]
        start = arrival_peak(big, end)
        if end < 3 * start:
            raise FitError(f"overlap window [{start}, {end}] spans less than a factor of 3")
        window = (start, end)
    p_fit = fit_detection(big, window, method)
    S_fit = fit_power_law(big.S, window, "direct", n=big.n)
    return AAHDetectionResult(amplitude, sizes, series, ends, tuple(window), p_fit, S_fit)
