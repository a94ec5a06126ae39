"""Experiment configuration: TOML files with [model], [protocol], [initial],
[fit], [spread], [output] and [sweep] sections.
"""

from __future__ import annotations

import copy
import hashlib
import itertools
import json
import sys
from dataclasses import asdict, dataclass, field, replace

from .errors import ConfigError
from .model import GOLDEN_RATIO

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

KINDS = ("strobo", "nh1", "nh2", "asymptotics", "aah-spread", "aah-detect", "sweep")
KIND_ALIASES = {"asympt": "asymptotics"}
FORMATS = ("csv", "json")


@dataclass
class ExperimentConfig:
    kind: str
    L: int | list = 50
    gamma: float = 1.0
    A: float = 0.0
    sigma: float = GOLDEN_RATIO
    phase: float = 0.0
    tau: float = 0.1
    n_max: int = 1000
    detector: int = 0
    a: int = 0
    sizes: list = field(default_factory=list)
    times: list = field(default_factory=list)  # aah-spread: measurement indices n, t = n tau
    windows: dict = field(default_factory=dict)
    method: str = "envelope"
    plateau_window: list | None = None
    agree_tol: float = 0.01
    out_dir: str = "out"
    format: str = "csv"
    log_sample: int = 200
    plots: bool = True
    compare_strobo: bool = True
    sweep: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)

    @property
    def hash(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    def cells(self) -> list["ExperimentConfig"]:
        """Expand a sweep into single-experiment configs (a non-sweep is its own cell)."""
        if self.kind != "sweep":
            return [self]
        spec = dict(self.sweep)
        kind = spec.pop("kind", "")
        kind = KIND_ALIASES.get(kind, kind)
        axes = {k: v if isinstance(v, list) else [v] for k, v in spec.items()}
        known = set(self.as_dict())
        for k in axes:
            if k not in known or k in ("kind", "sweep"):
                raise ConfigError(f"sweep.{k}", "not a sweepable field")
        out = []
        for combo in itertools.product(*axes.values()):
            cell = replace(copy.deepcopy(self), kind=kind, sweep={}, **dict(zip(axes, combo)))
            validate(cell)
            out.append(cell)
        return out


_SECTIONS = {
    "model": {"L": "L", "gamma": "gamma", "A": "A", "sigma": "sigma", "phase": "phase", "sizes": "sizes"},
    "protocol": {"tau": "tau", "n_max": "n_max", "detector": "detector"},
    "initial": {"a": "a"},
    "fit": {"windows": "windows", "method": "method", "plateau_window": "plateau_window",
            "agree_tol": "agree_tol"},
    "spread": {"times": "times"},
    "output": {"dir": "out_dir", "format": "format", "log_sample": "log_sample", "plots": "plots",
               "compare_strobo": "compare_strobo"},
}


def from_mapping(data: dict, kind: str | None = None) -> ExperimentConfig:
    data = copy.deepcopy(data)
    file_kind = data.pop("kind", None)
    if kind is not None and file_kind is not None and KIND_ALIASES.get(file_kind, file_kind) != KIND_ALIASES.get(kind, kind):
        raise ConfigError("kind", f"config declares {file_kind!r} but {kind!r} was requested")
    kind = KIND_ALIASES.get(kind or file_kind, kind or file_kind)
    if kind is None:
        raise ConfigError("kind", "missing experiment kind")
    values = {"kind": kind}
    sweep = data.pop("sweep", None)
    if sweep is not None:
        values["sweep"] = sweep
    for section, keys in _SECTIONS.items():
        sec = data.pop(section, {})
        if not isinstance(sec, dict):
            raise ConfigError(section, "expected a table")
        for key, val in sec.items():
            if key not in keys:
                raise ConfigError(f"{section}.{key}", "unknown field")
            values[keys[key]] = val
    if data:
        raise ConfigError(next(iter(data)), "unknown top-level field")
    if kind == "aah-spread" and "L" not in values:
        # documented default lattice: N=5001 below the transition, N=501 at and above it
        values["L"] = 2500 if float(values.get("A", 0.0)) < 2 else 250
    cfg = ExperimentConfig(**values)
    validate(cfg)
    return cfg


def load_config(path, kind: str | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Read a TOML config; ``overrides`` maps ``section.key`` to values."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"invalid TOML: {exc}") from None
    for dotted, val in (overrides or {}).items():
        section, _, key = dotted.rpartition(".")
        target = data.setdefault(section, {}) if section else data
        target[key] = val
    return from_mapping(data, kind)


def _check(cond, fld, msg):
    if not cond:
        raise ConfigError(fld, msg)


def validate(cfg: ExperimentConfig) -> None:
    _check(cfg.kind in KINDS, "kind", f"unknown kind {cfg.kind!r}; expected one of {KINDS}")
    _check(cfg.format in FORMATS, "output.format", f"expected one of {FORMATS}")
    _check(isinstance(cfg.log_sample, int) and cfg.log_sample > 0, "output.log_sample", "must be a positive integer")
    if cfg.kind == "sweep":
        _check(isinstance(cfg.sweep, dict) and cfg.sweep.get("kind"), "sweep.kind", "sweep needs a target kind")
        target = KIND_ALIASES.get(cfg.sweep["kind"], cfg.sweep["kind"])
        _check(target in KINDS and target != "sweep", "sweep.kind", f"cannot sweep over {target!r}")
        return
    _check(cfg.tau > 0, "protocol.tau", "must be positive")
    _check(cfg.gamma >= 0, "model.gamma", "must be non-negative")
    _check(cfg.A >= 0, "model.A", "must be non-negative")
    _check(isinstance(cfg.n_max, int) and cfg.n_max >= 1, "protocol.n_max", "must be an integer >= 1")
    if cfg.kind == "aah-detect":
        _check(len(cfg.sizes) >= 2 and len(set(cfg.sizes)) == len(cfg.sizes),
               "model.sizes", "need at least two distinct lattice sizes")
        _check(all(int(s) % 2 == 1 for s in cfg.sizes), "model.sizes", "sizes must be odd")
        _check(abs(cfg.a) <= (min(cfg.sizes) - 1) // 2, "initial.a", "outside the smallest lattice")
    elif cfg.kind != "asymptotics":
        _check(isinstance(cfg.L, int) and cfg.L >= 1, "model.L", "must be an integer >= 1")
        _check(abs(cfg.a) <= cfg.L, "initial.a", f"|a| must be <= L={cfg.L}")
        _check(abs(cfg.detector) <= cfg.L, "protocol.detector", "must lie within -L..L")
    if cfg.kind == "nh1":
        _check(cfg.a != 0, "initial.a", "the origin is not a site of the 2L-site effective lattice")
    if cfg.kind == "aah-spread":
        _check(len(cfg.times) >= 1, "spread.times", "need at least one measurement index")
        _check(all(int(n) >= 1 for n in cfg.times), "spread.times", "indices must be >= 1")
    _check(cfg.method in ("direct", "envelope", "bin"), "fit.method", "expected direct, envelope or bin")
    for name, win in cfg.windows.items():
        _check(isinstance(win, (list, tuple)) and len(win) == 2, f"fit.windows.{name}", "expected [lo, hi]")
        _check(1 <= win[0] <= win[1] <= cfg.n_max, f"fit.windows.{name}", f"must lie within [1, n_max={cfg.n_max}]")
    if cfg.plateau_window is not None:
        w = cfg.plateau_window
        _check(len(w) == 2 and 1 <= w[0] <= w[1] <= cfg.n_max, "fit.plateau_window",
               f"must lie within [1, n_max={cfg.n_max}]")
