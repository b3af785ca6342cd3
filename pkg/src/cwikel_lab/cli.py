"""Command line runner: ``cwikel-lab run | list | emit``.

Configuration comes from an optional ``key = value`` file, then the
``CWIKEL_LAB_OUT`` environment variable (output directory only), then
command line flags; later sources win.

Config keys: ``suites`` (comma separated), ``seed``, ``grid``, ``samples``,
``out``, ``format``, ``jobs``, ``timings`` and ``tol.<name>`` for the
tolerances in :data:`cwikel_lab.experiments.DEFAULT_TOL`.
"""
from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ReportIOError, UsageError
from .experiments import DEFAULT_TOL, SUITES, run_suite
from .reports import emit, from_json, sort_reports

OUT_ENV = "CWIKEL_LAB_OUT"
FORMATS = ("csv", "json", "plotdata")


@dataclass(frozen=True)
class RunConfig:
    suites: tuple = tuple(SUITES)
    seed: int = 0
    grid: int | None = None
    samples: int | None = None
    tol: dict = field(default_factory=dict)
    out: str = "reports"
    format: str = "csv"
    jobs: int = 1
    timings: bool = False

    def validate(self) -> "RunConfig":
        unknown = [s for s in self.suites if s not in SUITES]
        if unknown:
            raise UsageError(f"unknown experiment id(s) {', '.join(unknown)}; valid ids: {', '.join(SUITES)}")
        bad_tol = [k for k in self.tol if k not in DEFAULT_TOL]
        if bad_tol:
            raise UsageError(f"unknown tolerance(s) {', '.join(bad_tol)}; valid: {', '.join(DEFAULT_TOL)}")
        if self.format not in FORMATS:
            raise UsageError(f"format must be one of {', '.join(FORMATS)}")
        if self.jobs < 1:
            raise UsageError("jobs must be >= 1")
        return self


def _split_suites(text: str) -> tuple:
    return tuple(s.strip() for s in text.split(",") if s.strip())


def _bool(text: str) -> bool:
    return text.strip().lower() in ("1", "true", "yes", "on")


def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out: dict = {}
    tol = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key == "suites":
                out["suites"] = _split_suites(value)
            elif key in ("seed", "jobs"):
                out[key] = int(value)
            elif key in ("grid", "samples"):
                out[key] = int(value) if value else None
            elif key in ("out", "format"):
                out[key] = value
            elif key == "timings":
                out[key] = _bool(value)
            elif key.startswith("tol."):
                tol[key[4:]] = float(value)
            else:
                raise UsageError(f"config line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, UsageError):
                raise
            raise UsageError(f"config line {lineno}: bad value for {key}: {value!r}") from exc
    if tol:
        out["tol"] = tol
    return out


def _run_one(args):
    suite, cfg = args
    return run_suite(suite, cfg.seed, cfg.grid, cfg.samples, cfg.tol, cfg.timings)


def run(config: RunConfig) -> list:
    """Execute the selected suites and return the sorted reports."""
    config.validate()
    jobs = [(s, config) for s in config.suites]
    if config.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            chunks = list(pool.map(_run_one, jobs))
    else:
        chunks = [_run_one(j) for j in jobs]
    return sort_reports(r for chunk in chunks for r in chunk)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cwikel-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run experiment suites and write reports")
    r.add_argument("--suite", action="append", help="experiment id (repeatable or comma separated); default all")
    r.add_argument("--seed", type=int)
    r.add_argument("--grid", type=int, help="override the main grid size of every selected suite")
    r.add_argument("--samples", type=int, help="override the instance count of every selected suite")
    r.add_argument("--out", help=f"output directory (env {OUT_ENV} also sets it)")
    r.add_argument("--format", choices=FORMATS)
    r.add_argument("--config", type=Path, help="key = value configuration file")
    r.add_argument("--jobs", type=int, help="worker processes")
    r.add_argument("--timings", action="store_true", default=None, help="record wall times (breaks byte determinism)")

    sub.add_parser("list", help="list experiment ids")

    e = sub.add_parser("emit", help="convert a json report file to another format")
    e.add_argument("source", type=Path, help="reports.json written by `run --format json`")
    e.add_argument("--out", required=True)
    e.add_argument("--format", choices=FORMATS, default="csv")
    return p


def config_from_args(ns, environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    values: dict = {}
    if ns.config is not None:
        try:
            values.update(parse_config(ns.config.read_text()))
        except OSError as exc:
            raise UsageError(f"cannot read config {ns.config}: {exc}") from exc
    if environ.get(OUT_ENV):
        values["out"] = environ[OUT_ENV]
    if ns.suite is not None:
        values["suites"] = tuple(s for item in ns.suite for s in _split_suites(item))
    for key in ("seed", "grid", "samples", "out", "format", "jobs", "timings"):
        v = getattr(ns, key)
        if v is not None:
            values[key] = v
    return replace(RunConfig(), **values).validate()


def main(argv=None) -> int:
    parser = _parser()
    ns = parser.parse_args(argv)
    try:
        if ns.command == "list":
            for sid, (ref, _) in SUITES.items():
                print(f"{sid}\t{ref}")
            return 0
        if ns.command == "emit":
            reports = from_json(ns.source.read_text())
            for path in emit(reports, ns.format, ns.out):
                print(path)
            return 0
        cfg = config_from_args(ns)
        reports = run(cfg)
        for path in emit(reports, cfg.format, cfg.out):
            print(path)
        failed = sum(r.verdict == "fails" for r in reports)
        print(f"{len(reports)} rows, {failed} failed", file=sys.stderr)
        return 0
    except UsageError as exc:
        parser.error(str(exc))
    except ReportIOError as exc:
        print(f"cwikel-lab: {exc}", file=sys.stderr)
        return 1
    return 0
