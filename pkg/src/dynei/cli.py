"""Command line entry point: ``dynei list | run | sweep | ei | visits``.

Exit status is 0 when every self-check passes, 1 when any check fails and 2
for usage or input errors.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import estimators as est
from .harness import registry as reg
from .harness.config import RunConfig, load_config
from .harness.ingest import IngestError, ei_from_series, ingest_series, parse_target
from .harness.results import HistogramRecord, ResultRecord, ResultRow, emit
from .visits import ModelPmf, histogram_from_times, tv_distance


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--points", type=int, help="trajectory length per replica")
    p.add_argument("--replicas", type=int, help="number of independent replicas")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--workers", type=int, help="parallel replica processes")
    p.add_argument("--full-scale", action="store_true", default=None,
                   help="multiply the default trajectory length by 5")
    p.add_argument("--config", type=Path, help="INI file with [run] defaults and [experiment.<id>] overrides")
    p.add_argument("--out", type=Path, help="write results here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")


def _parse_value(text: str):
    text = text.strip()
    if "," in text:
        return tuple(_parse_value(t) for t in text.split(","))
    if "/" in text:
        return Fraction(text)
    try:
        return int(text)
    except ValueError:
        return float(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dynei", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="list registered experiments")

    p = sub.add_parser("run", help="run registered experiments")
    p.add_argument("ids", nargs="+", help="experiment ids, or 'all'")
    _add_common(p)

    p = sub.add_parser("sweep", help="re-run an experiment over values of one parameter")
    p.add_argument("--base", required=True, help="registered experiment id")
    p.add_argument("--param", required=True, choices=reg.SWEEP_PARAMS)
    p.add_argument("--values", required=True,
                   help="values separated by ';' (a weight vector is comma-separated), e.g. '0;1e-3;1/2'")
    _add_common(p)

    p = sub.add_parser("ei", help="extremal index of an external series of state vectors")
    _add_input(p)
    p.add_argument("--method", choices=("suveges", "order-m"), default="suveges")
    p.add_argument("--order", type=int, default=est.DEFAULT_ORDER, help="m for the order-m estimator")

    p = sub.add_parser("visits", help="visit histogram of a registered experiment or an external series")
    p.add_argument("id", nargs="?", help="registered visits experiment")
    _add_input(p, required=False)
    p.add_argument("-t", type=float, default=50.0, help="expected visits per window")
    p.add_argument("--windows", type=int, help="number of windows (default: as many as fit)")
    p.add_argument("--order", type=int, default=est.DEFAULT_ORDER)
    _add_common(p)
    return ap


def _add_input(p, required=True):
    p.add_argument("--input", type=Path, required=required, help="comma-separated file, one state vector per row")
    p.add_argument("--target", help="row index or comma-separated target vector")
    p.add_argument("--metric", choices=("euclidean", "circle"), default="euclidean")
    p.add_argument("--quantile", type=float, default=0.99, help="threshold quantile p")
    if required:
        p.add_argument("--out", type=Path)
        p.add_argument("--format", choices=("csv", "json"))


def _settings(args, cfg: RunConfig) -> reg.Settings:
    base = cfg.settings()
    pick = lambda a, b: b if a is None else a
    return reg.Settings(pick(args.points, base.n_points), pick(args.replicas, base.n_replicas),
                        pick(args.seed, base.seed), bool(pick(args.full_scale, base.full_scale)),
                        pick(args.workers, base.workers))


def _output(records, args, cfg: RunConfig) -> None:
    fmt = getattr(args, "format", None) or cfg.run.get("format", "csv")
    out = getattr(args, "out", None) or cfg.run.get("out")
    text = emit(records, fmt, out)
    if out is None:
        sys.stdout.write(text)


def _status(records) -> int:
    for rec in records:
        for r in rec.rows:
            if r.passed is False:
                print(f"FAIL {r.experiment} [{r.parameter}] {r.quantity} = {r.estimate:.6g} "
                      f"(theory {r.theory}, {r.comparison} {r.tolerance})", file=sys.stderr)
    return 0 if all(rec.passed for rec in records) else 1


def _cmd_list(args) -> int:
    for spec in reg.registry().values():
        print(f"{spec.id:28s} {spec.kind:10s} {spec.title}")
    return 0


def _cmd_run(args, cfg) -> int:
    ids = list(reg.registry()) if args.ids == ["all"] else args.ids
    settings = _settings(args, cfg)
    records = [reg.run_experiment(cfg.apply(reg.get(i)), settings) for i in ids]
    _output(records, args, cfg)
    return _status(records)


def _cmd_sweep(args, cfg) -> int:
    values = [_parse_value(v) for v in args.values.split(";") if v.strip()]
    if not values:
        raise ValueError("no sweep values given")
    records = reg.sweep(args.param, values, cfg.apply(reg.get(args.base)), _settings(args, cfg))
    _output(records, args, cfg)
    return _status(records)


def _series(args):
    if args.target is None:
        raise ValueError("--target is required with --input")
    return ingest_series(args.input, parse_target(args.target), args.metric)


def _cmd_ei(args, cfg) -> int:
    values = _series(args)
    theta, s = ei_from_series(values, args.method, args.order, args.quantile)
    row = ResultRow("ei", str(args.input), args.method, theta,
                    extra={"n": s.n, "exceedances": s.count, "threshold": s.u, "p": args.quantile,
                           "order": args.order, "target": args.target})
    _output([ResultRecord("ei", f"extremal index of {args.input}", [row])], args, cfg)
    return 0


def _cmd_visits(args, cfg) -> int:
    if args.id is not None:
        spec = reg.get(args.id)
        if spec.kind == "ensemble":
            raise ValueError(f"{args.id} is not a visits experiment")
        if args.windows is not None:
            spec = replace(spec, n_windows=args.windows)
        rec = reg.run_experiment(cfg.apply(replace(spec, t=args.t)), _settings(args, cfg))
        _output([rec], args, cfg)
        return _status([rec])
    if args.input is None:
        raise ValueError("give a registered experiment id or --input")
    values = _series(args)
    theta, s = ei_from_series(values, "order-m", args.order, args.quantile)
    mu = s.count / s.n
    n_windows = args.windows or int(s.n // math.floor(args.t / mu))
    h = histogram_from_times(s.times, s.n, mu, args.t, n_windows)
    models = [ModelPmf("poisson", args.t), ModelPmf("polya_aeppli", args.t, max(theta, 1e-12))]
    rows = [ResultRow("visits", str(args.input), f"tv:{m.kind}", tv_distance(h, m)) for m in models]
    rows[0].extra.update(theta_m=theta, window=h.window, n_windows=h.n_windows, mu=mu)
    hrec = HistogramRecord(Path(args.input).stem, args.t, h.window, h.n_windows, [int(c) for c in h.counts],
                           {m.label: [float(v) for v in np.atleast_1d(m.pmf(h.support))] for m in models})
    _output([ResultRecord("visits", f"visit histogram of {args.input}", rows, [hrec])], args, cfg)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
        if args.command == "list":
            return _cmd_list(args)
        handler = {"run": _cmd_run, "sweep": _cmd_sweep, "ei": _cmd_ei, "visits": _cmd_visits}[args.command]
        return handler(args, cfg)
    except (KeyError, ValueError, IndexError, OSError, IngestError, est.UnsupportedMapError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"dynei: error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
