"""Command-line entry point: ``qzeno <kind> --config run.toml --out results/``.

On failure the last line written to stderr is a JSON object
``{"error": <type>, "field": <field or null>, "message": ...}`` and the exit
status is nonzero.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import KIND_ALIASES, from_mapping, load_config, tomllib
from .errors import ConfigError, QZenoError
from .fitting import METHODS, fit_detection, fit_power_law
from .io import read_series, write_json

SUBCOMMANDS = ("strobo", "nh1", "nh2", "asympt", "aah-spread", "aah-detect", "sweep")

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def parse_value(text: str):
    """TOML literal if it parses (``3``, ``0.1``, ``[1, 2]``, ``true``), else a bare string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def parse_overrides(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError("--param", f"expected section.key=value, got {item!r}")
        out[key.strip()] = parse_value(val.strip())
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qzeno", description="Quasi-Zeno first-detection experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=f"run a {KIND_ALIASES.get(name, name)} experiment")
        p.add_argument("--config", help="TOML experiment file")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--log-sample", type=int, metavar="N", help="records per decade for long runs")
        p.add_argument("--param", action="append", metavar="SECTION.KEY=VALUE",
                       help="override one config field, e.g. protocol.tau=0.2")
        p.add_argument("--no-plots", action="store_true", help="skip PNG figures")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for sweep cells")
    f = sub.add_parser("fit", help="fit a power law to a column of a result file")
    f.add_argument("file")
    f.add_argument("--column", default="p")
    f.add_argument("--window", type=int, nargs=2, metavar=("LO", "HI"), required=True)
    f.add_argument("--method", choices=METHODS, default="envelope")
    f.add_argument("--out", help="write the fit report here instead of stdout")
    return parser


def _config_from_args(args):
    overrides = parse_overrides(args.param)
    if args.out is not None:
        overrides["output.dir"] = args.out
    if args.format is not None:
        overrides["output.format"] = args.format
    if args.log_sample is not None:
        overrides["output.log_sample"] = args.log_sample
    if args.no_plots:
        overrides["output.plots"] = False
    kind = KIND_ALIASES.get(args.command, args.command)
    if args.config:
        return load_config(args.config, kind, overrides)
    data: dict = {}
    for dotted, val in overrides.items():
        section, _, key = dotted.rpartition(".")
        (data.setdefault(section, {}) if section else data)[key] = val
    return from_mapping(data, kind)


def _fit(args) -> dict:
    series = read_series(args.file)
    if args.column == "p":
        return fit_detection(series, tuple(args.window), args.method).to_dict()
    y = {"S": series.S, "p": series.p}.get(args.column)
    if y is None:
        raise ConfigError("--column", "expected p or S")
    return fit_power_law(y, tuple(args.window), args.method, n=series.n).to_dict()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "fit":
            report = _fit(args)
            if args.out:
                write_json(args.out, report)
            else:
                print(json.dumps(report))
            return 0
        from .runner import run_experiment

        cfg = _config_from_args(args)
        manifest = run_experiment(cfg, jobs=args.jobs)
        print(json.dumps({"status": "ok", "config_hash": manifest["config_hash"],
                          "out": cfg.out_dir, "cells": len(manifest["cells"])}))
        return 0
    except ConfigError as exc:
        _error(exc, exc.field)
        return EXIT_CONFIG
    except (QZenoError, ValueError, OSError) as exc:
        _error(exc, None)
        return EXIT_RUNTIME


def _error(exc, fld):
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "field": fld, "message": str(exc)}) + "\n")


if __name__ == "__main__":
    sys.exit(main())
