"""Result records and their CSV / JSON serialisations."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

CSV_COLUMNS = ("experiment", "parameter", "quantity", "estimate", "std_dev", "theory", "pass")


@dataclass
class ResultRow:
    experiment: str
    parameter: str
    quantity: str
    estimate: float
    std_dev: float | None = None
    theory: float | None = None
    tolerance: float | None = None
    comparison: str | None = None
    passed: bool | None = None
    extra: dict = field(default_factory=dict)


@dataclass
class HistogramRecord:
    """Empirical visit frequencies next to the model pmfs evaluated on the same support."""

    label: str
    t: float
    window: int
    n_windows: int
    counts: list
    models: dict = field(default_factory=dict)


@dataclass
class ResultRecord:
    experiment: str
    title: str
    rows: list = field(default_factory=list)
    histograms: list = field(default_factory=list)
    settings: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.passed is not False for r in self.rows)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ResultRecord":
        d = dict(d)
        d["rows"] = [ResultRow(**r) for r in d.get("rows", [])]
        d["histograms"] = [HistogramRecord(**h) for h in d.get("histograms", [])]
        return cls(**d)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def results_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rec in records:
        for r in rec.rows:
            w.writerow([r.experiment, r.parameter, r.quantity, _fmt(r.estimate), _fmt(r.std_dev),
                        _fmt(r.theory), _fmt(r.passed)])
    return buf.getvalue()


def histogram_csv(h: HistogramRecord) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = list(h.models)
    w.writerow(["k", "empirical", *names])
    for k, c in enumerate(h.counts):
        w.writerow([k, repr(c / h.n_windows), *(repr(h.models[m][k]) for m in names)])
    return buf.getvalue()


def results_json(records) -> str:
    return json.dumps([r.to_dict() for r in records], indent=2, sort_keys=True)


def load_json(text: str) -> list:
    return [ResultRecord.from_dict(d) for d in json.loads(text)]


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise OSError(f"cannot write {path}: {e.strerror or e}") from e


def emit(records, fmt: str = "csv", path=None) -> str:
    """Serialise records; with ``path`` also write them (histograms go to ``<stem>_<label>.csv``)."""
    records = list(records)
    if fmt == "csv":
        text = results_csv(records)
    elif fmt == "json":
        text = results_json(records)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        path = Path(path)
        _write(path, text)
        if fmt == "csv":
            for rec in records:
                for h in rec.histograms:
                    _write(path.with_name(f"{path.stem}_{h.label}.csv"), histogram_csv(h))
    return text
