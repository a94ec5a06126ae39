"""CSV / JSON persistence of run results.

Tables are written with 17 significant digits so every float64 round-trips
exactly. Provenance lines (``# key=value``) precede the CSV header.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

SERIES_COLUMNS = ("n", "t", "S", "p")


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def run_filename(kind: str, sites: int, tau: float, a: int, ext: str = "csv") -> str:
    return f"{kind}_N{sites}_tau{float(tau)!r}_a{a}.{ext}"


def write_table(path, columns: dict, meta: dict | None = None, format: str = "csv") -> Path:
    """Write equal-length columns to ``path`` as CSV (with ``#`` provenance) or JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if format == "json":
        payload = {"meta": meta or {}, "columns": {k: np.asarray(v).tolist() for k, v in columns.items()}}
        path.write_text(json.dumps(payload, default=_json_default))
        return path
    with path.open("w", newline="") as fh:
        for key, val in (meta or {}).items():
            fh.write(f"# {key}={json.dumps(val, default=_json_default)}\n")
        w = csv.writer(fh)
        w.writerow(columns.keys())
        w.writerows(zip(*[[fmt(v) for v in col] for col in columns.values()]))
    return path


def read_table(path) -> tuple[dict, dict]:
    """Inverse of ``write_table``: returns ``(columns, meta)``."""
    path = Path(path)
    if path.suffix == ".json":
        payload = json.loads(path.read_text())
        return {k: np.asarray(v) for k, v in payload["columns"].items()}, payload["meta"]
    meta = {}
    with path.open(newline="") as fh:
        lines = [ln for ln in fh]
    body = []
    for ln in lines:
        if ln.startswith("#"):
            key, _, val = ln[1:].strip().partition("=")
            meta[key] = json.loads(val)
        else:
            body.append(ln)
    rows = list(csv.reader(body))
    header, data = rows[0], rows[1:]
    cols = {}
    for j, name in enumerate(header):
        raw = [r[j] for r in data]
        if all(_is_int(v) for v in raw):
            cols[name] = np.array([int(v) for v in raw], dtype=np.int64)
        else:
            cols[name] = np.array([float(v) for v in raw])
    return cols, meta


def _is_int(s: str) -> bool:
    return s.lstrip("-").isdigit()


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_series(path, series, meta: dict | None = None, format: str = "csv") -> Path:
    cols = {"n": series.n, "t": series.t, "S": series.S, "p": series.p}
    return write_table(path, cols, meta, format)


def read_series(path):
    from .stroboscopic import DetectionSeries

    cols, meta = read_table(path)
    n = cols["n"]
    tau = float(cols["t"][0] / n[0]) if n.size else float(meta.get("tau", 0.0))
    return DetectionSeries(float(meta.get("tau", tau)), n, cols["S"], cols["p"],
                           sites=meta.get("N"), meta=meta)


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path
