"""Experiment report records and their csv / json / plotdata serializations.

Output is byte-stable: floats in csv cells use 12 significant digits, json
uses ``repr`` floats (exact round trip), rows are sorted by experiment id and
then by a hash of the canonical parameter json.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ReportIOError

VERDICTS = ("holds", "fails", "recorded-only")
CSV_HEADER = ("experiment", "paper_ref", "param_json", "claimed", "observed", "verdict", "seconds")
FLOAT_FMT = "%.12g"


def _round_floats(obj):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return str(obj)
        return float(FLOAT_FMT % obj)
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_round_floats(obj), sort_keys=True, separators=(",", ":"))


def _cell(v) -> str:
    if isinstance(v, float):
        return FLOAT_FMT % v
    return str(v)


@dataclass
class ExperimentReport:
    experiment: str
    paper_ref: str
    params: dict
    claimed: str
    observed: dict
    verdict: str
    seconds: float = 0.0
    plot: list = field(default_factory=list)  # [[x, y], ...]

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}")

    @property
    def param_json(self) -> str:
        return canonical_json(self.params)

    @property
    def param_hash(self) -> str:
        return hashlib.sha256(self.param_json.encode()).hexdigest()

    def observed_text(self) -> str:
        return ";".join(f"{k}={_cell(v)}" for k, v in sorted(self.observed.items()))

    def csv_row(self) -> list[str]:
        return [self.experiment, self.paper_ref, self.param_json, self.claimed, self.observed_text(),
                self.verdict, FLOAT_FMT % self.seconds]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        return cls(**d)


def sort_reports(reports) -> list[ExperimentReport]:
    return sorted(reports, key=lambda r: (r.experiment, r.param_hash))


def to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in sort_reports(reports):
        w.writerow(r.csv_row())
    return buf.getvalue()


def to_json(reports) -> str:
    return json.dumps([r.to_dict() for r in sort_reports(reports)], sort_keys=True, indent=1) + "\n"


def from_json(text: str) -> list[ExperimentReport]:
    return [ExperimentReport.from_dict(d) for d in json.loads(text)]


def to_plotdata(reports) -> dict[str, str]:
    """One whitespace ``x y`` table per experiment id, blocks separated by a blank line."""
    out: dict[str, list[str]] = {}
    for r in sort_reports(reports):
        if not r.plot:
            continue
        lines = out.setdefault(r.experiment, [])
        if lines:
            lines.append("")
        lines.append(f"# {r.claimed} {r.param_json}")
        lines.extend(f"{FLOAT_FMT % x} {FLOAT_FMT % y}" for x, y in r.plot)
    return {k: "\n".join(v) + "\n" for k, v in out.items()}


def _write(path: Path, text: str):
    try:
        path.write_text(text)
    except OSError as exc:
        raise ReportIOError(f"cannot write {path}: {exc}") from exc


def emit(reports, fmt: str, out_dir) -> list[Path]:
    """Write ``reports`` in format ``csv``, ``json`` or ``plotdata`` under ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ReportIOError(f"cannot create {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise ReportIOError(f"{out} is not writable")
    if fmt == "csv":
        paths = {out / "reports.csv": to_csv(reports)}
    elif fmt == "json":
        paths = {out / "reports.json": to_json(reports)}
    elif fmt == "plotdata":
        paths = {out / f"{exp}.dat": text for exp, text in to_plotdata(reports).items()}
    else:
        raise ValueError("format must be csv, json or plotdata")
    for p, text in paths.items():
        _write(p, text)
    return list(paths)
