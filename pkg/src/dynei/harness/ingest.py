"""Observable series from external tables of state vectors."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .. import estimators as est
from ..observables import DEFAULT_CAP, distance, empirical_quantile, exceedances, neg_log

METRICS = ("euclidean", "circle")


class IngestError(ValueError):
    pass


class ZeroVarianceError(IngestError):
    """Every observable value is the same, so no threshold separates extremes."""


def _parse_float(s: str) -> float:
    v = float(s)
    if math.isnan(v):
        raise ValueError("nan")
    return v


def read_table(path) -> np.ndarray:
    """Rows of a comma-separated UTF-8 file as an ``(n, d)`` float array.

    A first line with any non-numeric field is taken as a header. Blank lines
    are skipped; errors quote the 1-based line number.
    """
    path = Path(path)
    rows, width = [], None
    with path.open(encoding="utf-8", newline="") as fh:
        for lineno, fields in enumerate(csv.reader(fh), start=1):
            if not fields or all(not f.strip() for f in fields):
                continue
            try:
                vals = [_parse_float(f) for f in fields]
            except ValueError:
                if not rows and width is None:
                    width = len(fields)
                    continue
                bad = next(f for f in fields if not _is_number(f))
                raise IngestError(f"{path}: row {lineno}: non-numeric field {bad!r}") from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise IngestError(f"{path}: row {lineno}: {len(vals)} fields, expected {width}")
            rows.append(vals)
    if not rows:
        raise IngestError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def _is_number(s: str) -> bool:
    try:
        _parse_float(s)
    except ValueError:
        return False
    return True


def parse_target(text: str):
    """``"12"`` is a row index; ``"0.1,0.2"`` (or a single value with a dot) is a vector."""
    text = text.strip()
    if "," not in text:
        try:
            return int(text)
        except ValueError:
            pass
    try:
        return tuple(_parse_float(t) for t in text.split(","))
    except ValueError:
        raise ValueError(f"target must be a row index or comma-separated vector, got {text!r}") from None


def series_from_table(table: np.ndarray, target, metric: str = "euclidean",
                      cap: float = DEFAULT_CAP) -> np.ndarray:
    """``-log`` distance from each row to ``target`` (a row index or a vector)."""
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}")
    table = np.atleast_2d(np.asarray(table, dtype=float))
    n, d = table.shape
    if isinstance(target, (int, np.integer)):
        if not -n <= target < n:
            raise IndexError(f"target row {target} outside 0..{n - 1}")
        z = table[target]
    else:
        z = np.asarray(target, dtype=float).ravel()
        if z.size != d:
            raise ValueError(f"target has {z.size} coordinates, rows have {d}")
    if metric == "circle":
        dist = distance(table if d > 1 else table[:, 0], z if d > 1 else z[0], dim=d)
    else:
        dist = np.sqrt(((table - z) ** 2).sum(axis=1))
    return neg_log(dist, cap)


def ingest_series(path, target, metric: str = "euclidean", cap: float = DEFAULT_CAP) -> np.ndarray:
    return series_from_table(read_table(path), target, metric, cap)


def ei_from_series(values, method: str = "suveges", m: int = est.DEFAULT_ORDER, p: float = 0.99):
    """Extremal index of an observable series at its own empirical p-quantile."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise IngestError("empty series")
    if np.all(v == v[0]):
        raise ZeroVarianceError("all observable values are equal; the extremal index is undefined")
    s = exceedances(v, empirical_quantile(v, p), p)
    return est.estimate(s, method, m), s
