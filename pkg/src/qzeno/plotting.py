"""Figures written next to the data files (PNG, non-interactive backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

golden_mean = (np.sqrt(5.0) - 1.0) / 2.0
fig_width = 6.0

params = {
    "axes.labelsize": 11,
    "font.size": 10,
    "legend.fontsize": 9,
    "legend.frameon": False,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
    "lines.linewidth": 1.0,
    "figure.dpi": 150,
    "savefig.bbox": "tight",
}


def new(ncols=1, nrows=1, scale=1.0):
    with plt.rc_context(params):
        fig, ax = plt.subplots(nrows, ncols, figsize=(fig_width * ncols * scale,
                                                      fig_width * golden_mean * nrows * scale))
    return fig, ax


def save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(params):
        fig.savefig(path)
    plt.close(fig)
    return path


def detection_figure(series, path, analytic=None, plateau=None, label="exact"):
    """First-detection probability (log-log) and survival, side by side."""
    fig, (ax1, ax2) = new(ncols=2, scale=0.75)
    m = series.p > 0
    ax1.loglog(series.n[m], series.p[m], color="C3", label=label)
    if analytic is not None:
        n_a, p_a, name = analytic
        ax1.loglog(n_a, p_a, color="C2", lw=0.8, label=name)
    ax1.set_xlabel("$n$")
    ax1.set_ylabel("$p_n$")
    ax1.legend()
    ax2.semilogx(series.n, series.S, color="C0")
    if plateau is not None:
        ax2.axhline(plateau, color="k", ls="--", lw=0.7)
    ax2.set_xlabel("$n$")
    ax2.set_ylabel("$S_n$")
    fig.tight_layout()
    return save(fig, path)


def survival_comparison_figure(curves, path, hlines=()):
    """Overlay several survival curves; ``curves`` holds ``(n, S, label)`` triples."""
    fig, ax = new(scale=0.8)
    for i, (n, S, label) in enumerate(curves):
        ax.semilogx(n, S, color=f"C{i}", ls="-" if i == 0 else "--", label=label)
    for y in hlines:
        ax.axhline(y, color="k", ls=":", lw=0.7)
    ax.set_xlabel("$n$")
    ax.set_ylabel("$S_n$")
    ax.legend()
    return save(fig, path)


def spreading_figure(profile, path, labels=None):
    fig, ax = new(scale=0.8)
    styles = ("-", "--", ":", "-.")
    for i in range(len(profile.times)):
        u = profile.scaled_axis(i)
        ax.plot(u, profile.scaled_density(i), ls=styles[i % 4], color=f"C{i}",
                label=None if labels is None else labels[i])
    xl = {"ballistic": "$x/t$", "diffusive": r"$x/\sqrt{t}$", "none": "$x$"}[profile.scaling]
    ax.set_xlabel(xl)
    ax.set_ylabel("scaled $|\\psi_x(t)|^2$")
    if labels is not None:
        ax.legend()
    return save(fig, path)


def aah_figure(result, path):
    """Survival for each lattice size with the fitted ``p_n`` decay as an inset."""
    fig, ax = new(scale=0.8)
    for i, (N, s) in enumerate(sorted(result.series.items())):
        ax.semilogx(s.n, s.S, color=f"C{i}", label=f"N={N}")
    lo, hi = result.window
    ax.axvspan(lo, hi, color="0.9", zorder=0)
    ax.set_xlabel("$n$")
    ax.set_ylabel("$S_n$")
    ax.legend(loc="lower left")
    inset = ax.inset_axes([0.58, 0.55, 0.38, 0.38])
    big = result.series[max(result.series)]
    m = (big.n >= lo) & (big.n <= hi) & (big.p > 0)
    inset.loglog(big.n[m], big.p[m], color="0.5", lw=0.5)
    nn = np.geomspace(lo, hi, 50)
    inset.loglog(nn, result.p_fit(nn), color="C3", label=f"slope {result.p_fit.exponent:.2f}")
    inset.legend(fontsize=7)
    inset.tick_params(labelsize=7)
    return save(fig, path)
