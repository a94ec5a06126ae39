"""Power-law fits on log-log axes for decaying (possibly oscillating) series."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .errors import FitError

MIN_POINTS = 10
METHODS = ("direct", "envelope", "bin")


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    intercept: float
    stderr: float
    window: tuple[int, int]
    method: str
    n_points: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = [int(w) for w in self.window]
        return d

    def __call__(self, n):
        return np.exp(self.intercept) * np.asarray(n, dtype=float) ** self.exponent


def _linfit(x, y, window, method):
    if len(x) < MIN_POINTS:
        raise FitError(f"{method} fit over {tuple(window)} has {len(x)} usable points, need {MIN_POINTS}")
    if np.any(y <= 0):
        raise FitError(f"non-positive values in {method} fit over {tuple(window)}")
    r = stats.linregress(np.log(x), np.log(y))
    return PowerLawFit(float(r.slope), float(r.intercept), float(r.stderr),
                       (int(window[0]), int(window[1])), method, len(x))


def local_maxima(y: np.ndarray) -> np.ndarray:
    """Indices i with ``y[i-1] < y[i] >= y[i+1]`` (interior points only)."""
    y = np.asarray(y)
    i = np.arange(1, y.size - 1)
    return i[(y[i] > y[i - 1]) & (y[i] >= y[i + 1])]


def log_bin_edges(lo: int, hi: int, bins_per_decade: int = 20) -> np.ndarray:
    """Integer bin starts, log-spaced over [lo, hi+1]; bins are [e_k, e_{k+1})."""
    count = max(1, int(np.ceil(bins_per_decade * np.log10((hi + 1) / lo))))
    return np.unique(np.round(np.geomspace(lo, hi + 1, count + 1)).astype(np.int64))


def fit_binned(starts, stops, means, window, bins_per_decade=None) -> PowerLawFit:
    """Fit bin means, bin k covering integers ``starts[k] <= n < stops[k]``.

    The abscissa of each bin is the point where the fitted power law equals its
    own bin average, found by fixed-point iteration; noiseless power laws are
    therefore fitted exactly regardless of bin width.
    """
    starts = np.asarray(starts)
    stops = np.asarray(stops)
    means = np.asarray(means, dtype=float)
    if len(means) < MIN_POINTS:
        raise FitError(f"bin fit over {tuple(window)} has {len(means)} bins, need {MIN_POINTS}")
    if np.any(means <= 0):
        raise FitError(f"non-positive bin averages in fit over {tuple(window)}")
    ranges = [np.arange(s, e, dtype=float) for s, e in zip(starts, stops)]
    log_mid = np.array([np.log(r).mean() for r in ranges])
    x = np.exp(log_mid)
    alpha = None
    for _ in range(100):
        fit = _linfit(x, means, window, "bin")
        if alpha is not None and abs(fit.exponent - alpha) < 1e-13:
            break
        alpha = fit.exponent
        if abs(alpha) < 1e-10:
            x = np.exp(log_mid)
        else:
            x = np.array([np.mean(r**alpha) ** (1.0 / alpha) for r in ranges])
    return fit


def fit_power_law(y, window=None, method: str = "direct", n=None, bins_per_decade: int = 20) -> PowerLawFit:
    """Least-squares power law ``y ~ n**exponent`` on log-log axes.

    Parameters
    ----------
    y : array_like
        Series values; indexed by ``n`` (default ``1..len(y)``), which must be
        consecutive integers for the ``envelope`` and ``bin`` methods.
    window : (int, int), optional
        Inclusive range of ``n`` to fit; defaults to the whole series.
    method : {"direct", "envelope", "bin"}
        ``envelope`` fits the local maxima only (all points if the series is
        monotone in the window), ``bin`` fits averages over log-spaced bins.

    Raises
    ------
    FitError
        Fewer than 10 usable points or non-positive values after preprocessing.
    """
    if method not in METHODS:
        raise ValueError(f"unknown fit method {method!r}; expected one of {METHODS}")
    y = np.asarray(y, dtype=float)
    n = np.arange(1, y.size + 1) if n is None else np.asarray(n)
    if window is None:
        window = (int(n[0]), int(n[-1]))
    lo, hi = int(window[0]), int(window[1])
    if lo < 1 or hi < lo:
        raise FitError(f"invalid window {window}")
    if method == "direct":
        m = (n >= lo) & (n <= hi)
        return _linfit(n[m].astype(float), y[m], window, method)
    if np.any(np.diff(n) != 1):
        raise FitError(f"{method} fit needs consecutive n")
    if method == "envelope":
        m = (n >= lo) & (n <= hi)
        if np.all(np.diff(y[m]) < 0) or np.all(np.diff(y[m]) > 0):
            # a monotone series is its own envelope
            return _linfit(n[m].astype(float), y[m], window, method)
        idx = local_maxima(y)
        idx = idx[(n[idx] >= lo) & (n[idx] <= hi)]
        return _linfit(n[idx].astype(float), y[idx], window, method)
    lo, hi = max(lo, int(n[0])), min(hi, int(n[-1]))
    edges = log_bin_edges(lo, hi, bins_per_decade)
    starts, stops = edges[:-1], edges[1:]
    off = int(n[0])
    means = np.array([y[s - off:e - off].mean() for s, e in zip(starts, stops)])
    return fit_binned(starts, stops, means, window)


def fit_detection(series, window, method: str = "envelope", bins_per_decade: int = 20) -> PowerLawFit:
    """Fit the first-detection probability of a ``DetectionSeries``.

    Works for log-sampled series as well: ``envelope`` uses the local maxima
    tracked during the run and ``bin`` averages ``p_n`` between recorded
    samples through differences of the survival probability.
    """
    lo, hi = int(window[0]), int(window[1])
    if method == "direct":
        return fit_power_law(series.p, window, "direct", n=series.n)
    if method == "envelope":
        en, ep = series.envelope_n, series.envelope_p
        if en.size == 0 and series.is_contiguous:
            # series read back from a file: recover the maxima from p itself
            k = local_maxima(series.p)
            en, ep = series.n[k], series.p[k]
        m = (en >= lo) & (en <= hi)
        return _linfit(en[m].astype(float), ep[m], window, "envelope")
    if method != "bin":
        raise ValueError(f"unknown fit method {method!r}")
    if series.is_contiguous:
        return fit_power_law(series.p, window, "bin", n=series.n, bins_per_decade=bins_per_decade)
    # bins between recorded samples: mean p over (n_i, n_j] = (S_i - S_j) / (n_j - n_i)
    n_all = np.concatenate(([0], series.n))
    S_all = np.concatenate(([1.0], series.S))
    targets = log_bin_edges(lo, hi, bins_per_decade) - 1
    pos = np.unique(np.clip(np.searchsorted(n_all, targets), 0, n_all.size - 1))
    pos = pos[(n_all[pos] >= lo - 1) & (n_all[pos] <= hi)]
    if pos.size < 2:
        raise FitError(f"too few recorded samples in window {window}")
    i, j = pos[:-1], pos[1:]
    means = (S_all[i] - S_all[j]) / (n_all[j] - n_all[i])
    return fit_binned(n_all[i] + 1, n_all[j] + 1, means, window)
