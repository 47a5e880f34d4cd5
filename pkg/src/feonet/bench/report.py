"""Report rows, slope fits and CSV emission.

Each study writes three files into the output directory:

``<study>.csv``          one row per run, columns ``HEADER``
``<study>_summary.csv``  ``key,value`` pairs: fitted slopes, means, checks
``<study>_timing.csv``   wall-clock seconds per run

The first two depend only on (config, seeds) and are byte-reproducible;
timings live in their own file for that reason.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import InvalidArgumentError

HEADER = (
    "study", "problem", "mode", "epsilon", "enriched", "elements", "h", "order", "dofs",
    "m_train", "m_test", "reference_factor", "seed", "train_loss", "train_rel_l2",
    "test_rel_l2", "layer_error", "layer_width", "status",
)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class Report:
    study: str
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    timings: list = field(default_factory=list)

    def add_row(self, **values):
        unknown = set(values) - set(HEADER)
        if unknown:
            raise InvalidArgumentError(f"unknown report columns {sorted(unknown)}")
        row = {k: values.get(k, "") for k in HEADER}
        row["study"] = self.study
        self.rows.append(row)
        return row

    def check(self, name, passed, detail=""):
        self.checks.append(Check(name, bool(passed), detail))

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def column(self, name, **where):
        return [r[name] for r in self.rows if all(r[k] == v for k, v in where.items())]


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    residual: float


def fit_slope(elements, errors):
    """Least-squares line through (log elements, log error); residual is the RMS misfit."""
    k = np.asarray(elements, dtype=float)
    e = np.asarray(errors, dtype=float)
    if k.size < 3:
        raise InvalidArgumentError("a slope fit needs at least 3 resolutions")
    if not (np.all(np.isfinite(e)) and np.all(e > 0) and np.all(k > 0)):
        raise InvalidArgumentError("slope fit needs positive finite errors")
    x, y = np.log(k), np.log(e)
    X = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ np.array([slope, intercept])
    return SlopeFit(float(slope), float(intercept), float(np.sqrt(np.mean(resid**2))))


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if math.isfinite(v) else str(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def emit_report(report, out_dir):
    """Write the report's CSV files; returns the path of the row file."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows_path = out / f"{report.study}.csv"
    with rows_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for row in report.rows:
            w.writerow([_fmt(row[k]) for k in HEADER])
    with (out / f"{report.study}_summary.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("key", "value"))
        for k, v in report.summary.items():
            w.writerow((k, _fmt(v)))
        for c in report.checks:
            w.writerow((f"check:{c.name}", "pass" if c.passed else "FAIL"))
    with (out / f"{report.study}_timing.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("run", "seconds"))
        for label, secs in report.timings:
            w.writerow((label, f"{secs:.3f}"))
    return rows_path


def read_rows(path):
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
