"""Run one configured experiment (or a sweep of them) and write its result files.

Every data file carries the config hash and the physical parameters as ``#``
provenance lines; ``manifest.json`` in the output directory lists the files of
the run.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io, plotting
from .aah import (aah_detection_suite, aah_free_spreading, overlap_distance,
                  scaled_l1_distance)
from .analytics import (p0_discrete, pn_asymptotic_origin, pt_asymptotic,
                        survival_limit)
from .config import ExperimentConfig, validate
from .effective import survival_nh1_closed_form, survival_nh2
from .errors import FitError
from .fitting import fit_detection
from .model import LatticeModel, MeasurementProtocol
from .stroboscopic import (LOG_SAMPLE_THRESHOLD, DetectionSeries,
                           default_plateau_window, estimate_plateau, fit_survival_excess,
                           log_sample_indices, run_stroboscopic)

log = logging.getLogger(__name__)

PLOT_SCRIPT = '''"""Re-plot {csv} (generated alongside the data)."""
import csv
import matplotlib.pyplot as plt

with open("{csv}") as fh:
    rows = [r for r in fh if not r.startswith("#")]
data = list(csv.DictReader(rows))
x = [float(r["{x}"]) for r in data]
fig, ax = plt.subplots()
for col in {ys!r}:
    y = [float(r[col]) for r in data]
    pts = [(u, v) for u, v in zip(x, y) if v > 0]
    ax.plot([u for u, _ in pts], [v for _, v in pts], label=col)
ax.set_xscale("{xscale}")
ax.set_yscale("{yscale}")
ax.set_xlabel("{x}")
ax.legend()
fig.savefig("{stem}.png", dpi=150)
'''


def build_model(cfg: ExperimentConfig, L: int | None = None) -> LatticeModel:
    L = cfg.L if L is None else L
    if cfg.A > 0:
        return LatticeModel.aah(L, cfg.A, sigma=cfg.sigma, phase=cfg.phase, gamma=cfg.gamma)
    return LatticeModel(L, gamma=cfg.gamma)


def provenance(cfg: ExperimentConfig, **extra) -> dict:
    meta = {"config_hash": cfg.hash, "kind": cfg.kind, "tau": cfg.tau, "gamma": cfg.gamma,
            "A": cfg.A, "sigma": cfg.sigma, "phase": cfg.phase, "a": cfg.a,
            "detector": cfg.detector, "n_max": cfg.n_max}
    meta.update(extra)
    return meta


def _record_indices(cfg: ExperimentConfig) -> np.ndarray:
    if cfg.n_max >= LOG_SAMPLE_THRESHOLD:
        return log_sample_indices(cfg.n_max, cfg.log_sample)
    return np.arange(1, cfg.n_max + 1)




def _plateau(series, cfg):
    window = cfg.plateau_window or default_plateau_window(series.sites)
    if window[1] > series.n_max:
        return None
    est = estimate_plateau(series, window, strict=False)
    return {"value": est.value, "spread": est.spread, "window": list(est.window), "flat": est.flat}


def _fits(series, cfg) -> dict:
    return {name: fit_detection(series, win, cfg.method).to_dict() for name, win in cfg.windows.items()}


def _strobo(cfg, model):
    protocol = MeasurementProtocol(cfg.tau, cfg.n_max, cfg.detector)
    return run_stroboscopic(model, protocol, cfg.a, samples_per_decade=cfg.log_sample)


class _Writer:
    def __init__(self, cfg: ExperimentConfig, out: Path):
        self.cfg, self.out, self.files = cfg, out, []

    def series(self, kind, series, meta):
        name = io.run_filename(kind, series.sites, self.cfg.tau, self.cfg.a, self.cfg.format)
        path = io.write_series(self.out / name, series, meta, self.cfg.format)
        self.files.append(path)
        if self.cfg.format == "csv":
            self.script(path, "n", ["p", "S"] if kind != "nh2" else ["S"])
        return path

    def table(self, name, columns, meta):
        path = io.write_table(self.out / f"{name}.{self.cfg.format}", columns, meta, self.cfg.format)
        self.files.append(path)
        return path

    def json(self, name, obj):
        path = io.write_json(self.out / name, obj)
        self.files.append(path)
        return path

    def script(self, data_path, x, ys, xscale="log", yscale="log"):
        stem = data_path.with_suffix("")
        path = stem.parent / f"plot_{stem.name}.py"
        path.write_text(PLOT_SCRIPT.format(csv=data_path.name, x=x, ys=ys, stem=f"replot_{stem.name}",
                                           xscale=xscale, yscale=yscale))
        self.files.append(path)

    def figure(self, func, name, *args, **kw):
        if self.cfg.plots:
            self.files.append(func(*args, path=self.out / name, **kw))


def _run_strobo(cfg, w):
    model = build_model(cfg)
    meta = provenance(cfg, N=model.size)
    series = _strobo(cfg, model)
    series.meta = meta
    path = w.series("strobo", series, meta)
    summary = {"fits": _fits(series, cfg), "plateau": _plateau(series, cfg),
               "S_final": float(series.S[-1])}
    if summary["plateau"] and summary["plateau"]["flat"] and series.is_contiguous:
        try:
            excess = fit_survival_excess(series, summary["plateau"]["value"])
            summary["survival_excess"] = excess.to_dict()
        except (FitError, ValueError) as exc:
            log.info("no survival-excess fit: %s", exc)
    analytic = None
    if cfg.a == 0 and cfg.detector == 0:
        n_a = series.n[series.n >= 2]
        analytic = (n_a, pn_asymptotic_origin(n_a, cfg.gamma, cfg.tau), "asymptotic")
    plateau = summary["plateau"]["value"] if summary["plateau"] else None
    w.figure(plotting.detection_figure, path.with_suffix(".png").name, series,
             analytic=analytic, plateau=plateau)
    return summary


def _compare(cfg, model, series, w, kind):
    """Max |S_strobo - S_kind| over the recorded indices, plus an overlay figure."""
    strobo = _strobo(cfg, model)
    common, i, j = np.intersect1d(strobo.n, series.n, return_indices=True)
    diff = float(np.max(np.abs(strobo.S[i] - series.S[j])))
    w.figure(plotting.survival_comparison_figure, f"compare_{kind}_N{model.size}_a{cfg.a}.png",
             [(strobo.n, strobo.S, "stroboscopic"), (series.n, series.S, kind)])
    return {"max_abs_diff": diff, "n_compared": int(common.size)}


def _run_nh1(cfg, w):
    model = build_model(cfg)
    if cfg.A != 0 or cfg.detector != 0:
        log.warning("mapping 1 is built for the free lattice with the detector at the origin")
    n = _record_indices(cfg)
    S = survival_nh1_closed_form(cfg.L, cfg.tau, cfg.a, n * cfg.tau)
    if n.size == cfg.n_max:
        S_prev = np.concatenate(([1.0], S[:-1]))
    else:
        S_prev = survival_nh1_closed_form(cfg.L, cfg.tau, cfg.a, (n - 1) * cfg.tau)
        S_prev[n == 1] = 1.0
    meta = provenance(cfg, N=model.size - 1)
    series = DetectionSeries(cfg.tau, n, S, S_prev - S, sites=model.size - 1, meta=meta)
    w.series("nh1", series, meta)
    summary = {"S_final": float(S[-1])}
    if cfg.compare_strobo:
        summary["strobo"] = _compare(cfg, model, series, w, "nh1")
    return summary


def _run_nh2(cfg, w):
    model = build_model(cfg)
    res = survival_nh2(cfg.L, cfg.tau, cfg.a, cfg.n_max, model=model)
    meta = provenance(cfg, N=model.size, Gamma=res.Gamma)
    series = res.as_series()
    series.meta = meta
    w.series("nh2", series, meta)
    summary = {"Gamma": res.Gamma, "plateau": _plateau(series, cfg),
               "max_flux_norm_gap": float(np.max(np.abs(res.S - res.S_flux))),
               "S_final": float(res.S[-1])}
    if cfg.compare_strobo:
        summary["strobo"] = _compare(cfg, model, series, w, "nh2")
    return summary


def _run_asymptotics(cfg, w):
    n = _record_indices(cfg)
    t = n * cfg.tau
    meta = provenance(cfg)
    if cfg.a == 0:
        cols = {"n": n, "t": t, "p_discrete": p0_discrete(n, cfg.tau),
                "p_origin": pn_asymptotic_origin(n, cfg.gamma, cfg.tau)}
    else:
        dens = pt_asymptotic(t, cfg.a, cfg.tau)
        cols = {"n": n, "t": t, "p_bessel": cfg.tau * dens.bessel, "p_asymptotic": cfg.tau * dens.asymptotic}
    name = f"asymptotics_tau{float(cfg.tau)!r}_a{cfg.a}"
    path = w.table(name, cols, meta)
    if cfg.format == "csv":
        w.script(path, "n", [k for k in cols if k.startswith("p_")])
    Gamma = 2.0 / cfg.tau
    return {"Gamma": Gamma, "S_infinity": survival_limit(cfg.a, Gamma)}


def _run_aah_spread(cfg, w):
    model = build_model(cfg)
    n = np.asarray(cfg.times, dtype=np.int64)
    profile = aah_free_spreading(model, n * cfg.tau, a=cfg.a)
    meta = provenance(cfg, N=model.size, scaling=profile.scaling, times_n=n.tolist())
    cols = {"x": profile.x}
    for k, nk in enumerate(n):
        cols[f"P_n{nk}"] = profile.densities[k]
    w.table(f"aah-spread_N{model.size}_A{cfg.A!r}_a{cfg.a}", cols, meta)
    pairs = [{"n": [int(n[i]), int(n[i + 1])],
              "scaled_l1": scaled_l1_distance(profile, i, i + 1),
              "overlap": overlap_distance(profile, i, i + 1)} for i in range(len(n) - 1)]
    w.figure(plotting.spreading_figure, f"aah-spread_N{model.size}_A{cfg.A!r}.png", profile,
             labels=[f"n={k}" for k in n])
    return {"scaling": profile.scaling, "variance": profile.variance().tolist(), "distances": pairs}


def _run_aah_detect(cfg, w):
    window = cfg.windows.get("p")
    res = aah_detection_suite(cfg.A, cfg.sizes, tau=cfg.tau, a=cfg.a, n_max=cfg.n_max,
                              phase=cfg.phase, method=cfg.method, agree_tol=cfg.agree_tol,
                              window=None if window is None else tuple(window))
    for N, s in res.series.items():
        meta = provenance(cfg, N=N)
        s.meta = meta
        w.series("strobo", s, meta)
    fits = {"p": res.p_fit.to_dict(), "S": res.S_fit.to_dict()}
    w.json(f"aah-detect_A{cfg.A!r}_fit.json", fits)
    w.figure(plotting.aah_figure, f"aah-detect_A{cfg.A!r}.png", res)
    return {"fits": fits, "overlap_ends": res.overlap_ends, "window": list(res.window)}


RUNNERS = {
    "strobo": _run_strobo,
    "nh1": _run_nh1,
    "nh2": _run_nh2,
    "asymptotics": _run_asymptotics,
    "aah-spread": _run_aah_spread,
    "aah-detect": _run_aah_detect,
}


def _run_cell(cfg: ExperimentConfig, out: Path) -> dict:
    w = _Writer(cfg, out)
    summary = RUNNERS[cfg.kind](cfg, w)
    fits = summary.get("fits")
    if fits and cfg.kind != "aah-detect":
        w.json(f"{cfg.kind}_fit.json", fits)
    w.json("summary.json", {"config_hash": cfg.hash, "config": cfg.as_dict(), "summary": summary})
    return {"hash": cfg.hash, "kind": cfg.kind, "dir": str(out), "files": [str(f) for f in w.files],
            "summary": summary}


def run_experiment(cfg: ExperimentConfig, out_dir=None, jobs: int = 1) -> dict:
    """Run ``cfg`` and write its outputs; a sweep runs each cell in its own subdirectory.

    Sweep cells are independent and may run in ``jobs`` worker processes; the
    manifest is written once, after every cell has finished.
    """
    validate(cfg)
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.kind != "sweep":
        cells = [_run_cell(cfg, out)]
    else:
        todo = [(c, out / f"{c.kind}-{c.hash}") for c in cfg.cells()]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=min(jobs, os.cpu_count() or 1)) as pool:
                cells = list(pool.map(_run_cell, *zip(*todo)))
        else:
            cells = [_run_cell(c, d) for c, d in todo]
    manifest = {"config_hash": cfg.hash, "config": cfg.as_dict(), "cells": cells}
    io.write_json(out / "manifest.json", manifest)
    return manifest

