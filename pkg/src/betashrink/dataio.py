"""CSV ingestion, run configuration and report emission."""

import csv
import json
import logging
import math
import os
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import DataValidationError, MissingColumn, NonNumericCell, ResponseOutOfRange
from .model import Dataset

__all__ = [
    "RunConfig",
    "load_csv",
    "response_transformation",
    "emit_report",
    "write_plot_data",
    "write_manifest",
]

log = logging.getLogger("betashrink")

MODES = ("fit", "simulate", "diagnose")
SCALES = ("none", "percent")


@dataclass(frozen=True)
class RunConfig:
    mode: str
    input_path: str = None
    response_column: str = None
    predictor_columns: tuple = None  # None means every column except the response
    response_scale: str = "none"
    estimators: tuple = ("ml",)
    bootstrap_B: int = 0
    seed: int = 0
    output_dir: str = "."
    extra: dict = field(default_factory=dict)  # mode-specific settings recorded in the manifest

    def __post_init__(self):
        if self.mode not in MODES:
            raise DataValidationError(f"mode must be one of {', '.join(MODES)}")
        if self.response_scale not in SCALES:
            raise DataValidationError(f"response scale must be one of {', '.join(SCALES)}")
        if self.mode in ("fit", "diagnose"):
            if not self.input_path:
                raise DataValidationError(f"{self.mode} needs an input file")
            if not self.response_column:
                raise DataValidationError(f"{self.mode} needs a response column")
        if self.bootstrap_B < 0:
            raise DataValidationError("bootstrap B must be >= 0")
        if self.predictor_columns is not None:
            object.__setattr__(self, "predictor_columns", tuple(self.predictor_columns))
        object.__setattr__(self, "estimators", tuple(self.estimators))

    def as_record(self):
        return {
            "mode": self.mode,
            "input_path": self.input_path,
            "response_column": self.response_column,
            "predictor_columns": list(self.predictor_columns) if self.predictor_columns is not None else None,
            "response_scale": self.response_scale,
            "estimators": [str(e) for e in self.estimators],
            "bootstrap_B": self.bootstrap_B,
            "seed": self.seed,
            **{k: self.extra[k] for k in sorted(self.extra)},
        }


def response_transformation(cfg):
    """Human-readable description of how the response column was mapped into (0, 1)."""
    if cfg.response_scale == "percent":
        return f"y = {cfg.response_column} / 100 (percent to proportion)"
    return f"y = {cfg.response_column} (used as given)"


def _parse_float(text, row, column):
    try:
        v = float(text)
    except ValueError:
        raise NonNumericCell(row, column, text) from None
    if not math.isfinite(v):
        raise NonNumericCell(row, column, text)
    return v


def load_csv(cfg):
    """Read the configured CSV into a Dataset with an intercept column.

    Comma separated, header row first, ``.`` decimals, UTF-8. Row numbers
    in errors count data rows from 1 (the header is not counted).
    """
    path = cfg.input_path
    if not os.path.isfile(path):
        raise DataValidationError(f"input file not found: {path}")
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataValidationError(f"input file is empty: {path}") from None
        body = [r for r in reader if any(c.strip() for c in r)]

    index = {name: j for j, name in enumerate(header)}
    wanted = cfg.predictor_columns
    if wanted is None:
        wanted = tuple(h for h in header if h != cfg.response_column)
    missing = [c for c in (cfg.response_column,) + tuple(wanted) if c not in index]
    if missing:
        raise MissingColumn(f"column(s) not found in {path}: {', '.join(missing)}")
    if not wanted:
        raise DataValidationError("no predictor columns selected")
    if not body:
        raise DataValidationError(f"no data rows in {path}")

    cols = [index[c] for c in wanted]
    ycol = index[cfg.response_column]
    P = np.empty((len(body), len(cols)))
    y = np.empty(len(body))
    for i, rec in enumerate(body, start=1):
        if len(rec) != len(header):
            raise DataValidationError(f"row {i} has {len(rec)} fields, header has {len(header)}")
        for k, (name, j) in enumerate(zip(wanted, cols)):
            P[i - 1, k] = _parse_float(rec[j].strip(), i, name)
        y[i - 1] = _parse_float(rec[ycol].strip(), i, cfg.response_column)

    if cfg.response_scale == "percent":
        y = y / 100.0
    bad = np.flatnonzero(~((y > 0.0) & (y < 1.0)))
    if bad.size:
        raise ResponseOutOfRange((bad + 1).tolist())

    ds = Dataset.from_predictors(P, y, wanted)
    log.info("loaded %d rows from %s; response %s (%s)", ds.n, path, cfg.response_column, response_transformation(cfg))
    for name, col in zip(wanted, P.T):
        log.info("  %-10s mean %.5g  sd %.5g  min %.5g  max %.5g", name, col.mean(), col.std(ddof=1), col.min(), col.max())
    return ds


def _slug(name):
    s = re.sub(r"[^A-Za-z0-9]+", "_", name).strip("_").lower()
    return s or "table"


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def _ensure_dir(output_dir):
    try:
        os.makedirs(output_dir, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {output_dir}: {exc.strerror or exc}") from exc


def emit_report(tables, output_dir):
    """Write every table as ``<name>.csv`` and ``<name>.txt``; returns the paths written."""
    tables = list(tables)
    if not tables:
        log.warning("no tables to write")
        return []
    _ensure_dir(output_dir)
    paths = []
    used = set()
    for t in tables:
        base = _slug(t.name)
        stem, k = base, 2
        while stem in used:
            stem, k = f"{base}_{k}", k + 1
        used.add(stem)
        paths.append(_write(os.path.join(output_dir, stem + ".csv"), t.csv_text()))
        paths.append(_write(os.path.join(output_dir, stem + ".txt"), t.text()))
    return paths


def write_plot_data(rows, path):
    """Plot data for TMSE against rho: rows of ``(rho, estimator, tmse)``."""
    lines = ["rho,estimator,tmse"]
    for rho, name, tmse in rows:
        lines.append(f"{float(rho)!r},{name},{float(tmse)!r}")
    parent = os.path.dirname(path)
    if parent:
        _ensure_dir(parent)
    return _write(path, "\n".join(lines) + "\n")


def write_manifest(cfg, output_dir, outputs, version, notes=None):
    """Record config, seed, version and response mapping; no timestamps, so reruns match byte for byte."""
    _ensure_dir(output_dir)
    record = {
        "tool": "betashrink",
        "version": version,
        "config": cfg.as_record(),
        "seed": cfg.seed,
        "outputs": sorted(os.path.basename(p) for p in outputs),
    }
    if cfg.response_column is not None:
        record["response_transformation"] = response_transformation(cfg)
    if notes:
        record["notes"] = notes
    path = os.path.join(output_dir, "manifest.json")
    return _write(path, json.dumps(record, indent=2, sort_keys=True) + "\n")
