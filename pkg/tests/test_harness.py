import json
import math
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

from dynei import cli
from dynei.dynamics import AdditiveUniform, IidSelection, MapSpec, TrajectoryConfig, trajectory
from dynei.estimators import theta_order_m, suveges, qk_spectrum
from dynei.harness import registry as reg
from dynei.harness.config import load_config, parse_config
from dynei.harness.ingest import (IngestError, ZeroVarianceError, ei_from_series, ingest_series,
                                  parse_target, read_table, series_from_table)
from dynei.harness.results import (CSV_COLUMNS, HistogramRecord, ResultRecord, ResultRow, emit, load_json,
                                   results_csv)
from dynei.harness.scenarios import Scenario, restart_visit_run, same_orbit_run, visit_run
from dynei.observables import Diagonal, Fixed, MovingUniform, distance, exceedances, neg_log, empirical_quantile

SMALL = reg.Settings(n_points=100_000, n_replicas=2)


class TestRegistry:
    def test_ids_unique_and_present(self):
        ids = list(reg.registry())
        assert len(ids) == len(set(ids))
        for needed in ("periodic-points", "theta-vs-order", "rotation-driven", "qk-b-half", "fixing-map-bound", "moving-discrete",
                       "target-noise", "additive-noise", "dei-additive", "dei-bernoulli",
                       "dei-tripling", "dei-markov", "visits-discrete-noise", "visits-moving-target",
                       "visits-rotation", "visits-markov-diagonal", "sequential-visits"):
            assert needed in ids

    def test_tolerances_nonnegative(self):
        for spec in reg.registry().values():
            for c in spec.cases:
                assert all(e.tol >= 0 for e in c.expect)

    def test_unknown(self):
        with pytest.raises(KeyError):
            reg.get("table99")

    def test_periodic_points_theory_column(self):
        th = [c.expect[0].theory for c in reg.get("periodic-points").cases]
        np.testing.assert_allclose(th, [0.9375, 0.5, 0.75, 1, 0.9730, 0.9291, 0.5354, 1], atol=2e-4)

    def test_periodic_points_shape(self):
        rec = reg.run_experiment("periodic-points", SMALL)
        assert len(rec.rows) == 8
        lines = results_csv([rec]).splitlines()
        assert len(lines) == 9 and all(len(l.split(",")) >= 7 for l in lines[:1])
        assert len(lines[0].split(",")) == 7

    def test_reproducible_csv(self):
        a = emit([reg.run_experiment("qk-b-half", SMALL)])
        b = emit([reg.run_experiment("qk-b-half", SMALL)])
        assert a == b

    def test_workers_do_not_change_output(self):
        spec = replace(reg.get("dei-tripling"), cases=reg.get("dei-tripling").cases[:1])
        a = reg.run_experiment(spec, SMALL)
        b = reg.run_experiment(spec, replace(SMALL, workers=2))
        assert [r.estimate for r in a.rows] == [r.estimate for r in b.rows]

    def test_inline_spec(self):
        spec = reg.ExperimentSpec("inline", "inline", "ensemble",
                                  (reg.Case("2x z=0", Scenario(MapSpec.doubling(), target=Fixed(0)),
                                            (reg.Expect("theta_m", 0.5, 0.2),)),), n_points=50_000, n_replicas=2)
        rec = reg.run_experiment(spec)
        assert rec.passed and rec.rows[0].theory == 0.5

    def test_expect_ops(self):
        assert reg.Expect("x", 1.0, 0.01, "ge").check(0.995)
        assert not reg.Expect("x", 1.0, 0.01, "ge").check(0.98)
        assert reg.Expect("x", 0.5, 0.0, "le", sigmas=3).check(0.53, 0.01)
        assert reg.Expect("x", 0.0, 0.0, "gt").check(1e-6)
        with pytest.raises(ValueError):
            reg.Expect("x", 1.0, -0.1)
        with pytest.raises(ValueError):
            reg.Expect("x", 1.0, 0.1, "near")

    def test_visits_record(self):
        spec = replace(reg.get("visits-rotation"), n_windows=500, n_pilot=50_000)
        rec = reg.run_experiment(spec)
        assert rec.histograms and rec.histograms[0].n_windows == 500
        assert {r.quantity for r in rec.rows} >= {"tv:poisson", "mean", "theta_m"}


class TestAutoTheory:
    def test_periodic(self):
        sc = Scenario(MapSpec.doubling(), target=Fixed(Fraction(4, 5)))
        assert reg.auto_theory(sc, "theta_m") == 0.9375
        assert reg.auto_theory(sc, "theta_m:3") == 1.0
        assert reg.auto_theory(sc, "suveges") == 1.0
        assert reg.auto_theory(sc, "q:3") == 0.0625

    def test_dei(self):
        sc = Scenario(MapSpec.tripling(), target=Diagonal(3))
        assert reg.auto_theory(sc, "suveges") == pytest.approx(8 / 9)

    def test_unknown(self):
        sc = Scenario(MapSpec.tripling(), AdditiveUniform(0.1), Fixed(0.5))
        assert reg.auto_theory(sc, "theta_m") is None


class TestSweep:
    def test_k_sweep(self):
        recs = reg.sweep("k", [2, 3], "dei-tripling", SMALL)
        assert len(recs) == 2
        assert [r.rows[0].theory for r in recs] == pytest.approx([2 / 3, 8 / 9])

    def test_eps_sweep_reaches_one(self):
        base = replace(reg.get("target-noise"),
                       cases=(reg.Case("z0=1/2", Scenario(MapSpec.tripling(), target=MovingUniform(0.5, 0.0))),),
                       report=("theta_m",))
        recs = reg.sweep("eps", [0.0, 0.05], base, reg.Settings(n_points=300_000, n_replicas=2))
        vals = [r.rows[0].estimate for r in recs]
        assert vals[0] < 0.75 and vals[1] > 0.97

    def test_bad_param(self):
        with pytest.raises(ValueError):
            reg.sweep("alpha", [1], "periodic-points")
        with pytest.raises(ValueError):
            reg.sweep("k", [2], "periodic-points")


class TestResults:
    def rec(self):
        rows = [ResultRow("e", "a", "theta_m", 0.5, 0.01, 0.5, 0.01, "abs", True, {"x": 1})]
        hist = HistogramRecord("e_0", 50.0, 100, 3, [1, 2], {"poisson(50)": [0.1, 0.2]})
        return ResultRecord("e", "title", rows, [hist], {"seed": 0}, 1.5)

    def test_empty_csv(self):
        assert emit([]) == ",".join(CSV_COLUMNS) + "\n"

    def test_json_round_trip(self):
        r = self.rec()
        back = load_json(emit([r], "json"))
        assert back == [r]

    def test_histogram_files(self, tmp_path):
        out = tmp_path / "res.csv"
        emit([self.rec()], "csv", out)
        hist = (tmp_path / "res_e_0.csv").read_text().splitlines()
        assert hist[0] == "k,empirical,poisson(50)"
        assert len(hist) == 3

    def test_io_error_names_path(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        with pytest.raises(OSError, match="file"):
            emit([self.rec()], "csv", blocker / "sub" / "out.csv")

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            emit([], "xml")

    def test_failed_row_fails_record(self):
        r = self.rec()
        r.rows[0].passed = False
        assert not r.passed


class TestIngest:
    def write(self, tmp_path, text, name="data.csv"):
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        return p

    def test_identical_rows_hit_cap(self, tmp_path):
        p = self.write(tmp_path, "1,2\n1,2\n1,2\n")
        assert ingest_series(p, 0).tolist() == [745.0] * 3

    def test_header(self, tmp_path):
        p = self.write(tmp_path, "x,y\n0,0\n3,4\n")
        np.testing.assert_allclose(ingest_series(p, (0.0, 0.0)), [745.0, -math.log(5)])

    def test_non_numeric_row_number(self, tmp_path):
        p = self.write(tmp_path, "x,y\n0,0\n1,abc\n")
        with pytest.raises(IngestError, match="row 3"):
            read_table(p)

    def test_ragged(self, tmp_path):
        p = self.write(tmp_path, "0,0\n1,2,3\n")
        with pytest.raises(IngestError, match="row 2"):
            read_table(p)

    def test_empty(self, tmp_path):
        with pytest.raises(IngestError):
            read_table(self.write(tmp_path, ""))
        with pytest.raises(IngestError):
            read_table(self.write(tmp_path, "a,b\n", "h.csv"))

    def test_zero_variance(self):
        with pytest.raises(ZeroVarianceError):
            ei_from_series(np.full(100, 745.0))

    def test_target_parsing(self):
        assert parse_target("12") == 12
        assert parse_target("0.1,0.2") == (0.1, 0.2)
        assert parse_target("0.5") == (0.5,)
        with pytest.raises(ValueError):
            parse_target("a,b")

    def test_target_validation(self):
        with pytest.raises(IndexError):
            series_from_table(np.zeros((3, 2)), 5)
        with pytest.raises(ValueError):
            series_from_table(np.zeros((3, 2)), (1.0,))

    def test_round_trip_fidelity(self, tmp_path):
        x = trajectory(MapSpec.doubling(), cfg=TrajectoryConfig(50_000, seed=1))
        y = trajectory(MapSpec.tripling(), cfg=TrajectoryConfig(50_000, seed=2))
        table = np.column_stack([x, y])
        p = tmp_path / "orbit.csv"
        np.savetxt(p, table, delimiter=",", header="x,y", comments="", fmt="%.17g")
        i = 1234
        for metric in ("euclidean", "circle"):
            disk = ingest_series(p, i, metric)
            if metric == "circle":
                mem = neg_log(distance(table, tuple(table[i]), dim=2))
            else:
                mem = neg_log(np.sqrt(((table - table[i]) ** 2).sum(axis=1)))
            assert np.array_equal(disk, mem)
            a = exceedances(disk, empirical_quantile(disk, 0.99))
            b = exceedances(mem, empirical_quantile(mem, 0.99))
            assert np.array_equal(a.times, b.times)
            for f in (lambda s: theta_order_m(s, 5), suveges, lambda s: sum(qk_spectrum(s).q)):
                assert abs(f(a) - f(b)) <= 1e-12

    def test_iid_gaussian_rows(self, tmp_path):
        rows = np.random.default_rng(0).standard_normal((10**5, 10))
        v = series_from_table(rows, tuple(np.zeros(10)))
        # no clustering, but chance returns within 5 steps cost 1 - 0.99^5 in the order-5 ratio
        theta, _ = ei_from_series(v, "order-m", 5, 0.99)
        assert abs(theta - 0.99**5) <= 0.01
        # one gap in a hundred is a chance immediate return; sampling error is about 0.01
        theta, _ = ei_from_series(v, "suveges", 5, 0.99)
        assert abs(theta - 0.99) <= 0.02


class TestConfig:
    def test_parse(self):
        cfg = parse_config("[run]\nseed = 3\nworkers = 2\nfull_scale = yes\n\n[experiment.periodic-points]\np = 0.995\n")
        s = cfg.settings()
        assert s.seed == 3 and s.workers == 2 and s.full_scale
        assert cfg.apply(reg.get("periodic-points")).p == 0.995
        assert cfg.apply(reg.get("rotation-driven")).p == 0.999

    def test_unknown_key(self):
        with pytest.raises(ValueError):
            parse_config("[run]\ncolour = red\n")
        with pytest.raises(ValueError):
            parse_config("[plot]\nx = 1\n")

    def test_load(self, tmp_path):
        p = tmp_path / "c.ini"
        p.write_text("[run]\nreplicas = 4\n")
        assert load_config(p).settings().n_replicas == 4

    def test_full_scale(self):
        assert reg.Settings(full_scale=True).apply(reg.get("periodic-points")).n_points == 5 * 10**7


class TestCli:
    def test_list(self, capsys):
        assert cli.main(["list"]) == 0
        assert "periodic-points" in capsys.readouterr().out

    def test_run_exit_code(self, capsys):
        # far too few points for the periodic rows: the self-check must fail
        assert cli.main(["run", "periodic-points", "--points", "20000", "--replicas", "2"]) == 1
        out = capsys.readouterr().out.splitlines()
        assert out[0] == ",".join(CSV_COLUMNS) and len(out) == 9

    def test_run_pass(self, capsys):
        assert cli.main(["run", "dei-markov", "--points", "1000000", "--replicas", "2"]) == 0

    def test_unknown_id(self, capsys):
        assert cli.main(["run", "nope"]) == 2
        assert "unknown experiment" in capsys.readouterr().err

    def test_json_out(self, tmp_path):
        out = tmp_path / "r.json"
        cli.main(["run", "dei-tripling", "--points", "50000", "--replicas", "2", "--format", "json",
                  "--out", str(out)])
        recs = load_json(out.read_text())
        assert recs[0].experiment == "dei-tripling" and len(recs[0].rows) == 4

    def test_sweep(self, capsys):
        cli.main(["sweep", "--base", "dei-tripling", "--param", "k", "--values", "2;3",
                  "--points", "50000", "--replicas", "2"])
        assert len(capsys.readouterr().out.splitlines()) == 3

    def test_ei(self, tmp_path, capsys):
        rows = np.random.default_rng(1).random((20_000, 2))
        p = tmp_path / "d.csv"
        np.savetxt(p, rows, delimiter=",", fmt="%.17g")
        assert cli.main(["ei", "--input", str(p), "--target", "0.5,0.5", "--method", "order-m",
                         "--quantile", "0.99"]) == 0
        line = capsys.readouterr().out.splitlines()[1].split(",")
        assert line[2] == "order-m" and 0.9 < float(line[3]) <= 1

    def test_ei_bad_file(self, tmp_path, capsys):
        p = tmp_path / "bad.csv"
        p.write_text("1,2\nx,y\n")
        assert cli.main(["ei", "--input", str(p), "--target", "0"]) == 2
        assert "row 2" in capsys.readouterr().err

    def test_visits_from_file(self, tmp_path, capsys):
        rows = np.random.default_rng(2).random((50_000, 1))
        p = tmp_path / "d.csv"
        np.savetxt(p, rows, delimiter=",", fmt="%.17g")
        assert cli.main(["visits", "--input", str(p), "--target", "0.5", "-t", "5"]) == 0
        assert "tv:poisson" in capsys.readouterr().out


class TestScenarioRuns:
    def test_visit_run_mu_and_window(self):
        sc = Scenario(MapSpec.doubling(), target=Fixed(1 / math.pi))
        run = visit_run(sc, 10.0, 300, 0.99, seed=1, n_pilot=50_000)
        assert run.histogram.window == math.floor(10 / run.mu)
        assert run.n_points >= 300 * run.histogram.window

    def test_restart_mode(self):
        sc = Scenario(MapSpec.doubling(), target=Fixed(1 / math.pi))
        h = restart_visit_run(sc, 5.0, 200, 0.99, seed=1, n_pilot=50_000)
        assert h.n_windows == 200 and abs(h.mean() - 5) < 1.0

    def test_same_orbit(self):
        sc = Scenario(MapSpec.doubling(), IidSelection((MapSpec.doubling(), MapSpec.affine(2, 0.25)), (0.5, 0.5)),
                      Fixed(0))
        run = same_orbit_run(sc, 10.0, 200_000, 0.99, head=50_000)
        assert run.series.n == 200_000 and run.histogram.n_windows == 200_000 // run.histogram.window
