"""Experiment specifications, the built-in registry, and the runners that execute them."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .. import estimators as est
from ..dynamics import (AdditiveUniform, IidSelection, MapSpec, NoNoise, QuenchedRotation,
                        Sequential)
from ..observables import (Diagonal, Fixed, MovingDiscrete, MovingMapDriven, MovingUniform,
                           Observational, four_point_targets)
from ..visits import ClusterLaw, ModelPmf, markov_cluster_law, tv_distance
from .results import HistogramRecord, ResultRecord, ResultRow
from .scenarios import Scenario, same_orbit_run, visit_run

FULL_SCALE_FACTOR = 5


@dataclass(frozen=True)
class Expect:
    """Expected value of one quantity.

    ``op`` is ``abs`` (``|est - theory| <= tol``), ``ge`` (``est >= theory - tol``),
    ``le`` (``est <= theory + tol``) or ``gt`` (``est > theory``). ``sigmas``
    widens the slack by that many replica standard deviations. With
    ``row=False`` the check is folded into the case's first row instead of
    getting a row of its own.
    """

    quantity: str
    theory: float
    tol: float = 0.0
    op: str = "abs"
    sigmas: float = 0.0
    row: bool = True

    def __post_init__(self):
        if self.op not in ("abs", "ge", "le", "gt"):
            raise ValueError(f"unknown comparison {self.op!r}")
        if self.tol < 0:
            raise ValueError("tolerances must be >= 0")

    def check(self, value: float, std: float | None = None) -> bool:
        slack = self.tol + self.sigmas * (std or 0.0)
        if self.op == "abs":
            return abs(value - self.theory) <= slack
        if self.op == "ge":
            return value >= self.theory - slack
        if self.op == "le":
            return value <= self.theory + slack
        return value > self.theory


@dataclass(frozen=True)
class ModelTemplate:
    """A visit-law model; ``theta=None`` means the extremal index estimated on the same orbit."""

    key: str
    kind: str
    theta: float | None = 1.0
    law: ClusterLaw | None = None

    def build(self, t: float, theta_hat: float | None = None) -> ModelPmf:
        theta = theta_hat if self.theta is None else self.theta
        return ModelPmf(self.kind, t, theta, self.law)


@dataclass(frozen=True)
class Case:
    label: str
    scenario: Scenario
    expect: tuple = ()
    report: tuple = ()
    models: tuple = ()
    # computed and stored in the first row's extra fields, not as rows
    notes: tuple = ()


@dataclass(frozen=True)
class ExperimentSpec:
    """One reproducible experiment.

    ``kind`` selects the runner: ``ensemble`` (replica-averaged estimators),
    ``visits`` (one long orbit, pilot threshold, fixed window count) or
    ``same_orbit`` (threshold, estimator and histogram from one orbit).
    ``report`` lists quantities computed for every case in addition to those
    with expectations.
    """

    id: str
    title: str
    kind: str
    cases: tuple
    p: float = 0.999
    m: int = est.DEFAULT_ORDER
    n_points: int = 10**7
    n_replicas: int = 20
    seed: int = 0
    t: float = 50.0
    n_windows: int = 10**5
    n_pilot: int = 10**6
    report: tuple = ()

    def __post_init__(self):
        if self.kind not in ("ensemble", "visits", "same_orbit"):
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if not self.cases:
            raise ValueError("an experiment needs at least one case")


@dataclass(frozen=True)
class Settings:
    """Run-time overrides; ``None`` keeps the experiment's own value."""

    n_points: int | None = None
    n_replicas: int | None = None
    seed: int | None = None
    full_scale: bool = False
    workers: int = 1

    def apply(self, spec: ExperimentSpec) -> ExperimentSpec:
        kw = {}
        n = spec.n_points * (FULL_SCALE_FACTOR if self.full_scale else 1)
        kw["n_points"] = self.n_points if self.n_points is not None else n
        if self.n_replicas is not None:
            kw["n_replicas"] = self.n_replicas
        if self.seed is not None:
            kw["seed"] = self.seed
        return replace(spec, **kw)


# -- quantities ------------------------------------------------------------------


def _quantity(s, q: str, m: int) -> float:
    name, _, arg = q.partition(":")
    if name == "theta_m":
        return est.theta_order_m(s, int(arg) if arg else m)
    if name == "suveges":
        return est.suveges(s)
    if name == "q":
        return est.q_hat(s, int(arg))
    if name == "theta_qk":
        return est.theta_from_qk(est.qk_spectrum(s, int(arg) if arg else m))
    if name == "count":
        return float(s.count)
    raise ValueError(f"unknown quantity {q!r}")


def _replica_task(sc: Scenario, n: int, p: float, seed: int, replica: int, quantities, m: int):
    s = sc.series(n, p, seed, replica)
    return {q: _quantity(s, q, m) for q in quantities}


def _case_quantities(spec: ExperimentSpec, case: Case) -> list:
    qs = [e.quantity for e in case.expect] + list(case.report) + list(spec.report) + list(case.notes)
    return list(dict.fromkeys(qs))


def _rows_for_case(spec: ExperimentSpec, case: Case, values: dict, stds: dict, extra=None) -> list:
    rows = []
    side = {}
    for e in case.expect:
        v, sd = values[e.quantity], stds.get(e.quantity)
        ok = e.check(v, sd)
        if e.row:
            rows.append(ResultRow(spec.id, case.label, e.quantity, v, sd, e.theory, e.tol, e.op, ok))
        else:
            side[e.quantity] = {"estimate": v, "theory": e.theory, "tolerance": e.tol,
                                "comparison": e.op, "pass": ok}
    checked = {e.quantity for e in case.expect}
    for q, v in values.items():
        if q not in checked and q not in case.notes:
            rows.append(ResultRow(spec.id, case.label, q, v, stds.get(q)))
    if side:
        if not rows:
            raise ValueError(f"case {case.label} has side checks but no row")
        rows[0].extra["checks"] = side
        if any(not c["pass"] for c in side.values()):
            rows[0].passed = False
    notes = {q: values[q] for q in case.notes if q not in checked}
    if notes:
        rows[0].extra["notes"] = notes
    if extra:
        rows[0].extra.update(extra)
    return rows


def _run_ensemble(spec: ExperimentSpec, workers: int) -> tuple[list, list]:
    rows = []
    for ci, case in enumerate(spec.cases):
        qs = _case_quantities(spec, case)
        args = [(case.scenario, spec.n_points, spec.p, spec.seed, (ci << 20) + r, qs, spec.m)
                for r in range(spec.n_replicas)]
        if workers > 1:
            with ProcessPoolExecutor(workers) as ex:
                per = list(ex.map(_replica_task, *zip(*args)))
        else:
            per = [_replica_task(*a) for a in args]
        values, stds = {}, {}
        for q in qs:
            v = np.array([d[q] for d in per])
            values[q] = float(v.mean())
            stds[q] = float(v.std(ddof=1)) if v.size > 1 else None
        rows += _rows_for_case(spec, case, values, stds)
    return rows, []


def _visit_outputs(spec, case, run, label):
    h = run.histogram
    theta_hat = est.theta_order_m(run.series, spec.m)
    models = {mt.key: mt.build(spec.t, theta_hat) for mt in case.models}
    values = {"mean": h.mean(), "theta_m": theta_hat}
    for key, model in models.items():
        values[f"tv:{key}"] = tv_distance(h, model)
    for e in case.expect:
        if e.quantity.startswith("tv_gap:"):
            a, b = e.quantity.split(":", 1)[1].split("-")
            values[e.quantity] = values[f"tv:{a}"] - values[f"tv:{b}"]
    hrec = HistogramRecord(label, spec.t, h.window, h.n_windows, [int(c) for c in h.counts],
                           {model.label: [float(v) for v in np.asarray(model.pmf(h.support))]
                            for model in models.values()})
    extra = {"u": run.u, "mu": run.mu, "n_points": run.n_points, "window": h.window,
             "n_windows": h.n_windows, "models": {k: m.label for k, m in models.items()}}
    return values, hrec, extra


def _run_visits(spec: ExperimentSpec, workers: int) -> tuple[list, list]:
    rows, hists = [], []
    for ci, case in enumerate(spec.cases):
        if spec.kind == "visits":
            run = visit_run(case.scenario, spec.t, spec.n_windows, spec.p, spec.seed, ci, spec.n_pilot)
        else:
            run = same_orbit_run(case.scenario, spec.t, spec.n_points, spec.p, spec.seed, ci)
        label = f"{spec.id}_{ci}"
        values, hrec, extra = _visit_outputs(spec, case, run, label)
        hists.append(hrec)
        rows += _rows_for_case(spec, case, values, {}, extra)
    return rows, hists


def run_experiment(spec, settings: Settings | None = None) -> ResultRecord:
    """Run a registry id or an inline ExperimentSpec and check it against its expectations."""
    settings = settings or Settings()
    if isinstance(spec, str):
        spec = get(spec)
    spec = settings.apply(spec)
    t0 = time.perf_counter()
    if spec.kind == "ensemble":
        rows, hists = _run_ensemble(spec, settings.workers)
    else:
        rows, hists = _run_visits(spec, settings.workers)
    meta = {"seed": spec.seed, "n_points": spec.n_points, "n_replicas": spec.n_replicas,
            "p": spec.p, "m": spec.m, "kind": spec.kind}
    if spec.kind != "ensemble":
        meta.update(t=spec.t, n_windows=spec.n_windows)
    return ResultRecord(spec.id, spec.title, rows, hists, meta, time.perf_counter() - t0)


# -- closed-form values for arbitrary scenarios ----------------------------------


def auto_theory(sc: Scenario, quantity: str, m: int = est.DEFAULT_ORDER) -> float | None:
    """Closed-form value of ``quantity`` for ``sc`` when one is known, else None."""
    name, _, arg = quantity.partition(":")
    theta_like = name in ("theta_m", "suveges", "theta_qk")
    order = int(arg) if arg and name in ("theta_m", "theta_qk") else m
    tg, sch, mp = sc.target, sc.scheme, sc.map
    try:
        if isinstance(tg, Diagonal) and theta_like:
            if isinstance(sch, NoNoise):
                return est.theory_dei(mp, tg.k)
            if isinstance(sch, IidSelection) and len(sch.maps) == 2 and all(f.integer_affine for f in sch.maps):
                f0, f1 = sch.maps
                if f0.slope == f1.slope:
                    if f0.offset == f1.offset:
                        return est.theory_dei(f0, tg.k)
                    return est.theory_dei_bernoulli(float(f0.slope) ** -(tg.k - 1), sch.weights, tg.k)
            return None
        if isinstance(tg, Fixed) and isinstance(sch, NoNoise):
            per = est.minimal_period(mp, tg.z, max_period=64)
            if per is None:
                return 1.0 if theta_like or name == "q" else None
            full = est.theory_periodic_ei(mp, tg.z, per)
            if name == "q":
                return 1.0 - full if int(arg) == per - 1 else 0.0
            if name == "suveges":
                return full if per == 1 else 1.0
            return full if order >= per else 1.0
        if (isinstance(tg, Fixed) and float(tg.z) == 0.0 and isinstance(sch, IidSelection)
                and len(sch.maps) == 2 and sch.maps[0] == MapSpec.doubling()
                and sch.maps[1].slope == 2 and 0 < sch.maps[1].offset < 1):
            b, p0 = sch.maps[1].offset, sch.weights[0]
            qs = [est.theory_discrete_noise_qk(b, j, p0) for j in range(order)]
            if name == "q":
                return qs[int(arg)] if int(arg) < order else None
            if name == "theta_qk" or name == "theta_m":
                return 1.0 - sum(qs)
        if isinstance(tg, (MovingUniform, Observational)) and tg.eps == 0:
            return auto_theory(sc.with_(target=Fixed(tg.z0)), quantity, m)
    except (est.UnsupportedMapError, ValueError):
        return None
    return None


# -- sweeps -----------------------------------------------------------------------

SWEEP_PARAMS = ("eps", "k", "m", "p", "b", "weights")


def _with_param(sc: Scenario, param: str, value) -> Scenario:
    tg, sch = sc.target, sc.scheme
    if param == "eps":
        if isinstance(sch, AdditiveUniform) or (isinstance(sch, NoNoise) and isinstance(tg, (Fixed, Diagonal))):
            return sc.with_(scheme=AdditiveUniform(float(value)) if value else NoNoise())
        if isinstance(tg, (MovingUniform, Observational)):
            return sc.with_(target=replace(tg, eps=float(value)))
        if isinstance(tg, MovingMapDriven):
            return sc.with_(target=replace(tg, eps=float(value)))
        raise ValueError("this scenario has no noise amplitude to sweep")
    if param == "k":
        if not isinstance(tg, Diagonal):
            raise ValueError("k applies to product (diagonal) targets only")
        return sc.with_(target=Diagonal(int(value)))
    if param == "b":
        if not isinstance(sch, (IidSelection, Sequential)):
            raise ValueError("b applies to random map selection only")
        last = sch.maps[-1]
        maps = sch.maps[:-1] + (MapSpec.affine(last.slope, value),)
        return sc.with_(scheme=replace(sch, maps=maps))
    if param == "weights":
        if not isinstance(sch, IidSelection):
            raise ValueError("weights apply to i.i.d. map selection only")
        return sc.with_(scheme=IidSelection(sch.maps, tuple(value)))
    raise ValueError(f"cannot sweep {param!r}")


def _label(value) -> str:
    if isinstance(value, (tuple, list)):
        return "(" + ",".join(_label(v) for v in value) + ")"
    if isinstance(value, Fraction):
        return str(value)
    return f"{value:g}" if isinstance(value, float) else str(value)


def sweep(param: str, values, base, settings: Settings | None = None) -> list:
    """Re-run ``base`` once per value of ``param``; one ResultRecord per value.

    Each row is compared with the closed form for the modified scenario when
    one is known, using the base experiment's tolerance for that quantity
    (0.015 otherwise).
    """
    if param not in SWEEP_PARAMS:
        raise ValueError(f"parameter must be one of {SWEEP_PARAMS}")
    spec = get(base) if isinstance(base, str) else base
    out = []
    for value in values:
        if param == "m":
            sub = replace(spec, m=int(value))
        elif param == "p":
            sub = replace(spec, p=float(value))
        else:
            moved, seen = [], set()
            for c in spec.cases:
                sc = _with_param(c.scenario, param, value)
                # several base cases can collapse onto one scenario (a k-sweep over a k-indexed table)
                if sc not in seen:
                    seen.add(sc)
                    moved.append(replace(c, scenario=sc))
            sub = replace(spec, cases=tuple(moved))
        cases = []
        for c in sub.cases:
            tol = {e.quantity: e.tol for e in c.expect}
            qs = [e.quantity for e in c.expect] + list(c.report)
            if param in ("m", "p"):
                qs = [q.split(":")[0] if q.startswith("theta_m") else q for q in qs]
            exp = []
            for q in dict.fromkeys(qs):
                th = auto_theory(c.scenario, q, sub.m)
                if th is not None and sub.kind == "ensemble":
                    exp.append(Expect(q, th, tol.get(q, 0.015)))
            rep = tuple(q for q in qs if q not in {e.quantity for e in exp})
            cases.append(replace(c, label=f"{param}={_label(value)} {c.label}", expect=tuple(exp),
                                 report=rep))
        rec = run_experiment(replace(sub, cases=tuple(cases)), settings)
        rec.settings.update(sweep_param=param, sweep_value=_label(value))
        out.append(rec)
    return out


# -- the registry -----------------------------------------------------------------

_D = MapSpec.doubling()
_T = MapSpec.tripling()
_CAT = MapSpec.cat()
_MK = MapSpec.markov()
_INV_PI = 1 / math.pi
_ALPHA = math.sqrt(2) - 1
# ball radius of the 0.999 threshold for a Lebesgue-distributed circle orbit
_R999 = (1 - 0.999) / 2
_GENERIC = 1 / math.sqrt(2)


def _theta(v, tol=0.01, q="theta_m", **kw):
    return Expect(q, v, tol, **kw)


def _periodic_points():
    rows = [
        ("2x z=4/5", _D, Fraction(4, 5), 4),
        ("2x z=0", _D, 0, 1),
        ("2x z=1/3", _D, Fraction(1, 3), 2),
        ("2x z=1/pi", _D, _INV_PI, None),
        ("cat z=(1/3,2/3)", _CAT, (Fraction(1, 3), Fraction(2, 3)), 4),
        ("cat z=(1/2,1/2)", _CAT, (Fraction(1, 2), Fraction(1, 2)), 3),
        ("cat z=(0,0)", _CAT, (0, 0), 1),
        ("cat z=(1/sqrt2,pi-3)", _CAT, (1 / math.sqrt(2), math.pi - 3), None),
    ]
    cases = []
    for label, mp, z, per in rows:
        th = 1.0 if per is None else est.theory_periodic_ei(mp, z, per)
        exp = [_theta(th)]
        if per is not None and per > 1:
            exp.append(Expect("suveges", 1.0, 0.01, "ge", row=False))
        cases.append(Case(label, Scenario(mp, target=Fixed(z)), tuple(exp), notes=("suveges",)))
    return ExperimentSpec("periodic-points", "Extremal index at periodic and generic points of the doubling and cat maps",
                          "ensemble", tuple(cases))


def _theta_vs_order():
    pts = [("2x z=4/5", _D, Fraction(4, 5), 4), ("2x z=0", _D, 0, 1), ("2x z=1/3", _D, Fraction(1, 3), 2),
           ("cat z=(1/2,1/2)", _CAT, (Fraction(1, 2), Fraction(1, 2)), 3),
           ("cat z=(1/3,2/3)", _CAT, (Fraction(1, 3), Fraction(2, 3)), 4)]
    cases = []
    for label, mp, z, per in pts:
        full = est.theory_periodic_ei(mp, z, per)
        exp = tuple(_theta(1.0 if mm < per else full, 0.01, f"theta_m:{mm}") for mm in range(1, 9))
        cases.append(Case(label, Scenario(mp, target=Fixed(z)), exp))
    return ExperimentSpec("theta-vs-order", "Order-m estimate against m: 1 below the period, the index from the period on",
                          "ensemble", tuple(cases), n_replicas=10)


def _rotation_driven():
    cases = tuple(Case(f"3x+omega alpha={name}", Scenario(_T, QuenchedRotation(a, 0.0), Fixed(0.0)),
                       (_theta(1.0, 0.01, op="ge"),), report=("suveges",))
                  for name, a in (("1/pi", _INV_PI), ("sqrt2-1", _ALPHA), ("4/5", Fraction(4, 5))))
    return ExperimentSpec("rotation-driven", "Tripling map driven by a rotation of the fibre offset",
                          "ensemble", cases, n_replicas=6)


def _iid_half(p0=0.5):
    return IidSelection((_D, MapSpec.affine(2, Fraction(1, 2))), (p0, 1 - p0))


def _qk_b_half():
    exp = tuple(Expect(f"q:{j}", est.theory_discrete_noise_qk(Fraction(1, 2), j), 0.005) for j in range(5))
    exp += (Expect("theta_qk", 2 / 3, 0.01),)
    case = Case("2x | 2x+1/2, weights 1/2, z=0", Scenario(_D, _iid_half(), Fixed(0.0)), exp, report=("theta_m",))
    return ExperimentSpec("qk-b-half", "Return-time spectrum for random choice between 2x and 2x+1/2",
                          "ensemble", (case,))


def _fixing_map_bound():
    cases = []
    for j in (0, 1, 2):
        for p0 in (0.25, 0.5, 0.75):
            sch = IidSelection((MapSpec.affine(2 + j, 0), MapSpec.affine(2, _INV_PI)), (p0, 1 - p0))
            bound = 1 - p0 / (2 + j)
            cases.append(Case(f"{2 + j}x (p0={p0}) | 2x+1/pi, z=0", Scenario(_D, sch, Fixed(0.0)),
                              (Expect("theta_m", bound, 0.0, "le", sigmas=3.0),), report=("q:0",)))
    return ExperimentSpec("fixing-map-bound", "Upper bound on the index when a map fixing the target is chosen with probability p0",
                          "ensemble", tuple(cases), n_replicas=10)


def _moving_discrete():
    cases = []
    for name, z0 in (("2/11", Fraction(2, 11)), ("10/13", Fraction(10, 13)), ("1/pi", _INV_PI)):
        exp = (Expect("theta_m", 1 - 1.5 / 16 - 6 / 256, 0.01),
               Expect("q:0", est.theory_moving_discrete_qk(0), 0.005),
               Expect("q:1", est.theory_moving_discrete_qk(1), 0.005),
               *(Expect(f"q:{j}", 0.0, 0.005, "le") for j in (2, 3, 4)))
        cases.append(Case(f"2x four targets z0={name}", Scenario(_D, target=four_point_targets(z0)), exp))
    return ExperimentSpec("moving-discrete", "Doubling map with a target hopping among two preimages, a point and its image",
                          "ensemble", tuple(cases))


def _observational():
    cases = []
    for eps in (0.0, 1e-4, _R999, 10 * _R999, 20 * _R999, 100 * _R999, 200 * _R999):
        sc = Scenario(_T, target=MovingUniform(0.5, eps))
        if eps == 0:
            exp = (_theta(2 / 3, 0.01),)
        elif eps >= 10 * _R999 - 1e-15:
            exp = (_theta(1.0, 0.01, op="ge"),)
        else:
            exp = ()
        cases.append(Case(f"z0=1/2 eps={eps:g}", sc, exp, report=() if exp else ("theta_m",)))
    for eps in (0.0, _R999, 10 * _R999, 100 * _R999, 200 * _R999):
        cases.append(Case(f"z0=1/sqrt2 eps={eps:g}", Scenario(_T, target=MovingUniform(_GENERIC, eps)),
                          (_theta(1.0, 0.01, op="ge"),)))
    return ExperimentSpec("target-noise", "Tripling map with the target centre drawn uniformly around z0",
                          "ensemble", tuple(cases), n_replicas=10)


def _additive():
    cases = [Case("eps=0", Scenario(_T, target=Fixed(0.5)), (_theta(2 / 3, 0.01),))]
    for f in (1, 10, 100, 200):
        cases.append(Case(f"eps={f}r", Scenario(_T, AdditiveUniform(f * _R999), Fixed(0.5)),
                          (_theta(1.0, 0.01, op="ge"),), report=("suveges",)))
    return ExperimentSpec("additive-noise", "Tripling map with additive uniform noise, target at the fixed point 1/2",
                          "ensemble", tuple(cases), n_replicas=10)


def _dei_additive():
    cases = []
    for mp in (_T, MapSpec.gauss()):
        for k in (2, 3, 4):
            for eps in (0.0, 1e-3, 1e-2, 1e-1):
                sc = Scenario(mp, AdditiveUniform(eps) if eps else NoNoise(), Diagonal(k))
                if eps == 0:
                    exp = (Expect("suveges", est.theory_dei(mp, k), 0.015),)
                elif eps == 1e-1:
                    exp = (Expect("suveges", 1.0, 0.01, "ge"),)
                else:
                    exp = ()
                cases.append(Case(f"{mp.name} k={k} eps={eps:g}", sc, exp, report=() if exp else ("suveges",)))
    return ExperimentSpec("dei-additive", "Product-observable index under additive noise of growing amplitude",
                          "ensemble", tuple(cases), n_replicas=5)


def _dei_tripling():
    cases = tuple(Case(f"3x k={k}", Scenario(_T, target=Diagonal(k)),
                       (Expect("suveges", 1 - 3.0 ** -(k - 1), 0.015),)) for k in (2, 3, 4, 5))
    return ExperimentSpec("dei-tripling", "Product-observable index of the tripling map for k = 2..5",
                          "ensemble", cases, p=0.995)


def _dei_markov():
    case = Case("markov k=2", Scenario(_MK, target=Diagonal(2)), (Expect("suveges", est.theory_dei(_MK, 2), 0.015),),
                report=("theta_m",))
    return ExperimentSpec("dei-markov", "Product-observable index of the three-branch Markov map",
                          "ensemble", (case,), p=0.995)


def _dei_bernoulli():
    cases = []
    for b in (0.0, 0.1, 0.25):
        for k in (2, 3):
            maps = (_T, MapSpec.affine(3, b))
            th = (est.theory_dei(_T, k) if b == 0
                  else est.theory_dei_bernoulli(3.0 ** -(k - 1), (0.5, 0.5), k))
            cases.append(Case(f"3x | 3x+{b:g} k={k}", Scenario(_T, IidSelection(maps, (0.5, 0.5)), Diagonal(k)),
                              (Expect("suveges", th, 0.02),)))
    return ExperimentSpec("dei-bernoulli", "Product-observable index for random choice between 3x and 3x+b per component",
                          "ensemble", tuple(cases), p=0.995)


def _visits():
    out = []
    law = markov_cluster_law()
    pa_markov = 1 - float(est.theory_dei(_MK, 2))
    out.append(ExperimentSpec(
        "visits-markov-diagonal", "Visits near the diagonal of the Markov map product against two cluster laws",
        "visits",
        (Case("markov k=2", Scenario(_MK, target=Diagonal(2)),
              (Expect("tv:cp", 0.0, 0.03, "le"), Expect("tv_gap:pa-cp", 0.0, 0.0, "gt")),
              models=(ModelTemplate("cp", "compound_poisson", law=law),
                      ModelTemplate("pa", "polya_aeppli", 1 - pa_markov))),),
        p=0.99))
    out.append(ExperimentSpec(
        "visits-discrete-noise", "Visits to 0 under random choice between 2x and 2x+1/2",
        "visits",
        (Case("2x | 2x+1/2, z=0", Scenario(_D, _iid_half(), Fixed(0.0)),
              (Expect("tv:pa", 0.0, 0.03, "le"),),
              report=("tv:poisson",),
              models=(ModelTemplate("pa", "polya_aeppli", 2 / 3), ModelTemplate("poisson", "poisson"))),),
        p=0.99))
    out.append(ExperimentSpec(
        "visits-moving-target", "Visits to the hopping four-point target of the doubling map",
        "visits",
        (Case("2x four targets z0=2/11", Scenario(_D, target=four_point_targets()),
              (Expect("tv:pa", 0.0, 0.03, "le"),),
              models=(ModelTemplate("pa", "polya_aeppli", 1 - 1.5 / 16 - 6 / 256),
                      ModelTemplate("poisson", "poisson"))),),
        p=0.99))
    out.append(ExperimentSpec(
        "visits-rotation", "Visits to 0 for the rotation-driven tripling map",
        "visits",
        (Case("3x+omega alpha=sqrt2-1, z=0", Scenario(_T, QuenchedRotation(_ALPHA, 0.0), Fixed(0.0)),
              (Expect("tv:poisson", 0.0, 0.03, "le"),),
              models=(ModelTemplate("poisson", "poisson"),)),),
        p=0.99))
    maps = tuple(MapSpec.affine(2, float(b)) for b in np.linspace(0, 0.5, 10))
    out.append(ExperimentSpec(
        "sequential-visits", "Ten maps 2x+b_i with weights redrawn every 10 steps: index and visits on one orbit",
        "same_orbit",
        (Case("2x+b_i, tau=10, z=0", Scenario(_D, Sequential(maps, 10), Fixed(0.0)),
              (Expect("tv:pa", 0.0, 0.05, "le"),),
              models=(ModelTemplate("pa", "polya_aeppli", None), ModelTemplate("poisson", "poisson"))),),
        p=0.995, n_points=2 * 10**8))
    return out


def _build():
    specs = [_periodic_points(), _theta_vs_order(), _rotation_driven(), _qk_b_half(), _fixing_map_bound(), _moving_discrete(),
             _observational(), _additive(), _dei_additive(), _dei_tripling(), _dei_markov(),
             _dei_bernoulli(), *_visits()]
    reg = {}
    for s in specs:
        if s.id in reg:
            raise ValueError(f"duplicate experiment id {s.id}")
        reg[s.id] = s
    return reg


_REGISTRY: dict | None = None


def registry() -> dict:
    global _REGISTRY
    if _REGISTRY is None:
        _REGISTRY = _build()
    return _REGISTRY


def get(exp_id: str) -> ExperimentSpec:
    reg = registry()
    if exp_id not in reg:
        raise KeyError(f"unknown experiment {exp_id!r}; known: {', '.join(reg)}")
    return reg[exp_id]
