"""Exact stroboscopic detection dynamics: free evolution over ``tau`` followed by
a projective "not detected" measurement at the detector site.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FitError, NoPlateauError
from .fitting import PowerLawFit, fit_detection, fit_power_law
from .model import (
    InitialState,
    LatticeModel,
    MeasurementProtocol,
    build_hamiltonian,
    build_projector,
    localized_state,
)
from .numerics import eig_tridiagonal, expm

LOG_SAMPLE_THRESHOLD = 10**5


@dataclass
class DetectionSeries:
    """Survival ``S_n`` and first-detection ``p_n = S_{n-1} - S_n`` (``S_0 = 1``).

    ``n`` holds the recorded measurement indices; with log-spaced recording they
    are sparse, while ``envelope_n``/``envelope_p`` always hold every local
    maximum of ``p_n`` over the full run.
    """

    tau: float
    n: np.ndarray
    S: np.ndarray
    p: np.ndarray
    envelope_n: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    envelope_p: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sites: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def t(self) -> np.ndarray:
        return self.n * self.tau

    @property
    def n_max(self) -> int:
        return int(self.n[-1])

    @property
    def is_contiguous(self) -> bool:
        return self.n[0] == 1 and np.all(np.diff(self.n) == 1)

    def survival_at(self, n: int) -> float:
        i = np.searchsorted(self.n, n)
        if i == self.n.size or self.n[i] != n:
            raise KeyError(f"measurement {n} was not recorded")
        return float(self.S[i])


def log_sample_indices(n_max: int, per_decade: int = 200) -> np.ndarray:
    count = int(np.ceil(per_decade * np.log10(max(n_max, 10)))) + 1
    idx = np.unique(np.round(np.geomspace(1, n_max, count)).astype(np.int64))
    return np.union1d(idx, [n_max])


def run_stroboscopic(
    model: LatticeModel,
    protocol: MeasurementProtocol,
    init: InitialState | int,
    record: str = "auto",
    samples_per_decade: int = 200,
    unitary: str = "spectral",
) -> DetectionSeries:
    """Iterate ``psi_n = B exp(-i H tau) psi_{n-1}`` from a localized state.

    ``record`` is ``"all"``, ``"log"`` or ``"auto"`` (log-spaced once
    ``n_max >= 1e5``). ``unitary="oracle"`` swaps the eigenbasis step for a
    dense matrix exponential, for validation on small lattices.
    """
    a = init.a if isinstance(init, InitialState) else int(init)
    psi = localized_state(model, a)
    det = build_projector(model, protocol.detector_site).index
    n_max = int(protocol.n_max)
    if record == "auto":
        record = "log" if n_max >= LOG_SAMPLE_THRESHOLD else "all"
    if record == "all":
        rec = np.arange(1, n_max + 1)
    elif record == "log":
        rec = log_sample_indices(n_max, samples_per_decade)
    else:
        raise ValueError(f"unknown record mode {record!r}")
    H = build_hamiltonian(model)

    if unitary == "spectral":
        spec = eig_tridiagonal(H)
        V = spec.eigenvectors
        VT = np.ascontiguousarray(V.T)
        cos = np.cos(spec.eigenvalues * protocol.tau)
        sin = np.sin(spec.eigenvalues * protocol.tau)

        P = np.stack([psi.real, psi.imag], axis=1)

        def step(P):
            C = VT @ P
            re = C[:, 0] * cos + C[:, 1] * sin
            im = C[:, 1] * cos - C[:, 0] * sin
            C[:, 0] = re
            C[:, 1] = im
            return V @ C

    elif unitary == "oracle":
        U = expm(-1j * protocol.tau * H.to_dense())
        P = psi.copy()

        def step(P):
            return U @ P

    else:
        raise ValueError(f"unknown unitary step {unitary!r}")

    S_rec = np.empty(rec.size)
    p_rec = np.empty(rec.size)
    env_n: list[int] = []
    env_p: list[float] = []
    S = 1.0
    p_prev2 = p_prev = -1.0
    k = 0
    for n in range(1, n_max + 1):
        P = step(P)
        amp = P[det]
        p = float(np.sum(np.abs(amp) ** 2))
        P[det] = 0
        S -= p
        if p_prev > p_prev2 and p_prev >= p and n > 2:
            env_n.append(n - 1)
            env_p.append(p_prev)
        p_prev2, p_prev = p_prev, p
        if n == rec[k]:
            S_rec[k] = S
            p_rec[k] = p
            k += 1
    return DetectionSeries(
        tau=protocol.tau,
        n=rec,
        S=S_rec,
        p=p_rec,
        envelope_n=np.array(env_n, dtype=np.int64),
        envelope_p=np.array(env_p),
        sites=model.size,
        meta={
            "L": model.L,
            "gamma": model.gamma,
            "a": a,
            "detector": protocol.detector_site,
            "A": None if model.potential is None else model.potential.amplitude,
        },
    )


@dataclass(frozen=True)
class PlateauEstimate:
    value: float
    spread: float
    window: tuple[int, int]

    @property
    def flat(self) -> bool:
        return self.spread <= 0.1 * abs(self.value)


def default_plateau_window(sites: int) -> tuple[int, int]:
    return 2 * sites, 4 * sites


def estimate_plateau(series: DetectionSeries, window=None, strict: bool = True) -> PlateauEstimate:
    """Mean of ``S_n`` over ``window`` (default ``[2N, 4N]``) with its max-min spread.

    Raises ``NoPlateauError`` when the spread exceeds 10% of the mean, unless
    ``strict`` is false.
    """
    if window is None:
        if series.sites is None:
            raise ValueError("window required when the lattice size is unknown")
        window = default_plateau_window(series.sites)
    lo, hi = int(window[0]), int(window[1])
    m = (series.n >= lo) & (series.n <= hi)
    if lo < 1 or hi > series.n_max or not m.any():
        raise ValueError(f"plateau window {window} outside recorded range 1..{series.n_max}")
    vals = series.S[m]
    est = PlateauEstimate(float(vals.mean()), float(vals.max() - vals.min()), (lo, hi))
    if strict and not est.flat:
        raise NoPlateauError(est.value, est.spread, est.window)
    return est


def plateau_end(series: DetectionSeries, plateau: PlateauEstimate, rel_tol: float = 0.01) -> int:
    """First recorded ``n`` past the plateau window where ``S_n`` leaves ``value*(1 +- rel_tol)``."""
    m = series.n > plateau.window[1]
    off = np.abs(series.S[m] - plateau.value) > rel_tol * abs(plateau.value)
    if not off.any():
        return series.n_max
    return int(series.n[m][np.argmax(off)])


def fit_survival_excess(series: DetectionSeries, s_inf: float, window=None) -> PowerLawFit:
    """Power-law fit of ``S_n - s_inf`` (default window ``[10, N]``, before finite-size decay).

    The decay exponent is measured, not assumed; for a start on the detector
    it comes out close to -2.
    """
    if window is None:
        window = (10, series.sites)
    return fit_power_law(series.S - s_inf, window, "direct", n=series.n)


@dataclass(frozen=True)
class RegimeReport:
    sites: int
    early: PowerLawFit
    intermediate: PowerLawFit | None
    decay_rate: float | None
    windows: dict


def default_regime_windows(sites: int) -> dict:
    return {
        "early": (20, 4 * sites),
        "intermediate": (20 * sites, sites**3 // 20),
        "exponential": (sites**3, None),
    }


def detect_regimes(series: DetectionSeries, sites: int | None = None, windows=None,
                   method: str = "envelope") -> RegimeReport:
    """Fit the three temporal regimes of ``p_n`` on a lattice of ``sites`` sites.

    Power-law exponents are fitted for ``n < N`` and ``N < n < N^3`` and an
    exponential rate (per measurement) for ``n > N^3``. Regimes the run does
    not reach are reported as ``None``; the early regime is required.
    """
    N = sites if sites is not None else series.sites
    w = default_regime_windows(N)
    w.update(windows or {})
    early = fit_detection(series, w["early"], method)
    inter = None
    lo, hi = w["intermediate"]
    if series.n_max >= hi:
        inter = fit_detection(series, (lo, hi), method)
    rate = None
    lo_e = w["exponential"][0]
    if series.n_max > lo_e:
        en, ep = series.envelope_n, series.envelope_p
        m = en >= lo_e
        if m.sum() >= 10:
            rate = float(-np.polyfit(en[m], np.log(ep[m]), 1)[0])
        else:
            raise FitError(f"too few envelope points beyond n={lo_e} for an exponential fit")
    used = {
        "early": tuple(w["early"]),
        "intermediate": (lo, hi) if inter is not None else None,
        "exponential": (lo_e, series.n_max) if rate is not None else None,
    }
    return RegimeReport(N, early, inter, rate, used)
