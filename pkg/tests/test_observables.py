import math
from fractions import Fraction

import numpy as np
import pytest

from dynei.dynamics import MapSpec, TrajectoryConfig, trajectory
from dynei.estimators import q_hat
from dynei.observables import (DEFAULT_CAP, Diagonal, ExceedanceSeries, Fixed, MovingDiscrete,
                               MovingMapDriven, MovingUniform, Observational, distance,
                               empirical_quantile, exceedances, four_point_targets, neg_log,
                               observe_dei, observe_fixed, observe_moving, set_measure_empirical,
                               threshold_exceedances)
from dynei.harness.scenarios import Scenario

D, T = MapSpec.doubling(), MapSpec.tripling()


class TestDistance:
    def test_wraps(self):
        assert distance(0.1, 0.9) == pytest.approx(0.2)

    def test_identity(self):
        assert distance(0.37, 0.37) == 0

    def test_torus(self):
        assert distance((0, 0), (0.5, 0.5)) == pytest.approx(math.sqrt(2) / 2)

    def test_arrays_against_one_point(self):
        x = np.array([[0.1, 0.1], [0.9, 0.0]])
        np.testing.assert_allclose(distance(x, (0.0, 0.0)), [math.hypot(0.1, 0.1), 0.1])

    def test_mismatch(self):
        with pytest.raises(ValueError):
            distance((0.1, 0.2), (0.1, 0.2, 0.3))


class TestObserveFixed:
    def test_exact_hit_is_cap(self):
        assert observe_fixed(np.array([0.25]), 0.25)[0] == DEFAULT_CAP == 745

    def test_unit_value(self):
        assert observe_fixed(np.array([math.exp(-1)]), 0.0)[0] == pytest.approx(1.0)

    def test_period_two_orbit(self):
        # exact orbit 1/3 -> 2/3 -> 1/3, projected to floats
        x = np.array([float(Fraction(1, 3) if i % 2 == 0 else Fraction(2, 3)) for i in range(10)])
        v = observe_fixed(x, Fraction(1, 3))
        assert np.all(v[::2] == DEFAULT_CAP)
        assert np.all(v[1::2] < 2)

    def test_custom_cap(self):
        assert neg_log(np.array([0.0]), cap=50.0)[0] == 50.0


class TestMoving:
    x = trajectory(D, cfg=TrajectoryConfig(5000, seed=4))

    def test_uniform_zero_eps_is_fixed(self):
        assert np.array_equal(observe_moving(self.x, MovingUniform(0.3, 0.0)), observe_fixed(self.x, 0.3))

    def test_observational_zero_eps_is_fixed(self):
        assert np.array_equal(observe_moving(self.x, Observational(0.3, 0.0)), observe_fixed(self.x, 0.3))

    def test_single_point_discrete_is_fixed(self):
        assert np.array_equal(observe_moving(self.x, MovingDiscrete((0.3,))), observe_fixed(self.x, 0.3))

    def test_uniform_targets_stay_in_window(self):
        tg = MovingUniform(0.5, 0.01)
        z = tg.sampler(1, 0)(10_000)
        assert np.all(np.abs(z - 0.5) <= 0.01)

    def test_discrete_weights(self):
        tg = MovingDiscrete((0.1, 0.2), (0.2, 0.8))
        z = tg.sampler(1, 0)(100_000)
        assert abs(np.mean(z == 0.2) - 0.8) < 0.005

    def test_map_driven_follows_driving_orbit(self):
        tg = MovingMapDriven(0.5, 0.1, T, initial=0.2)
        z = tg.sampler(0, 0)(3)
        np.testing.assert_allclose(z, [0.4 + 0.2 * 0.2, 0.4 + 0.2 * 0.6, 0.4 + 0.2 * 0.8], atol=1e-12)

    def test_sampler_continues_across_chunks(self):
        tg = MovingUniform(0.5, 0.1)
        draw = tg.sampler(3, 1)
        a = np.concatenate([draw(100), draw(50)])
        b = tg.sampler(3, 1)(150)
        assert np.array_equal(a, b)

    def test_four_point_scheme(self):
        tg = four_point_targets(Fraction(2, 11))
        z1, z2, z0, z3 = tg.points
        assert 2 * z1 % 1 == z0 and 2 * z2 % 1 == z0
        assert 2 * z0 % 1 == z3 and 2 * z3 % 1 not in tg.points

    def test_four_point_q0(self):
        sc = Scenario(D, target=four_point_targets())
        s = sc.series(2 * 10**6, 0.999, seed=0)
        assert abs(q_hat(s, 0) - 0.09375) < 0.01

    def test_validation(self):
        with pytest.raises(ValueError):
            MovingUniform(0.5, -1)
        with pytest.raises(ValueError):
            MovingDiscrete((0.1, 0.2), (0.5, 0.6))
        with pytest.raises(ValueError):
            Diagonal(1)


class TestDei:
    def test_on_diagonal(self):
        assert observe_dei(np.array([[0.3, 0.3]]))[0] == DEFAULT_CAP

    def test_max_of_circle_distances(self):
        assert observe_dei(np.array([[0.0, 0.1, 0.9]]))[0] == pytest.approx(-math.log(0.1))

    def test_needs_two(self):
        with pytest.raises(ValueError):
            observe_dei(np.array([[0.1, 0.2]]), k=1)

    def test_tail_slope(self):
        # independent uniform components: P(phi > u) = (2 e^{-u})^{k-1}
        for k in (2, 3):
            x = trajectory(D, cfg=TrajectoryConfig(10**6, seed=k), components=k)
            v = observe_dei(x)
            us = np.linspace(1.0, 4.0 if k == 2 else 2.5, 8)
            logp = np.log([np.mean(v > u) for u in us])
            slope = np.polyfit(us, logp, 1)[0]
            assert abs(slope + (k - 1)) < 0.05 * (k - 1)


class TestQuantile:
    def test_nearest_rank(self):
        assert empirical_quantile(np.arange(1, 1001), 0.999) == 1000

    def test_constant(self):
        assert empirical_quantile(np.full(10, 3.5), 0.9) == 3.5

    def test_uniform(self):
        v = np.random.default_rng(0).random(10**6)
        assert abs(empirical_quantile(v, 0.99) - 0.99) < 0.001

    def test_errors(self):
        with pytest.raises(ValueError):
            empirical_quantile(np.array([]), 0.5)
        with pytest.raises(ValueError):
            empirical_quantile(np.arange(3), 1.0)


class TestExceedances:
    def test_none(self):
        assert exceedances(np.arange(10.0), 100).count == 0

    def test_all(self):
        v = np.random.default_rng(1).random(100)
        assert exceedances(v, v.min()).count == 100

    def test_flags_match_values(self):
        v = np.random.default_rng(2).random(1000)
        s = exceedances(v, 0.7)
        assert np.array_equal(s.flags, v >= 0.7)

    def test_doubling_flag_fraction(self):
        x = trajectory(D, cfg=TrajectoryConfig(10**6, seed=9))
        s = threshold_exceedances(observe_fixed(x, 1 / math.pi), 0.999)
        assert abs(s.count / s.n - 0.001) < 3e-5

    def test_duality_with_ball(self):
        x = trajectory(D, cfg=TrajectoryConfig(10**5, seed=3))
        z = 0.3
        s = threshold_exceedances(observe_fixed(x, z), 0.99)
        assert np.array_equal(s.flags, distance(x, z) <= math.exp(-s.u))

    def test_from_flags(self):
        s = ExceedanceSeries.from_flags([0, 1, 1, 0, 1])
        assert s.times.tolist() == [1, 2, 4] and s.n == 5

    def test_bad_threshold(self):
        with pytest.raises(ValueError):
            exceedances(np.arange(3.0), math.inf)


class TestSetMeasure:
    def test_all_false(self):
        assert set_measure_empirical(np.zeros(10, dtype=bool)) == 0

    def test_iid_rate(self):
        f = np.random.default_rng(5).random(10**6) < 0.001
        assert abs(set_measure_empirical(f) - 0.001) < 1e-4

    def test_markov_diagonal(self):
        sc = Scenario(MapSpec.markov(), target=Diagonal(2))
        s = sc.series(10**5, 0.99, seed=1)
        assert abs(set_measure_empirical(s.flags) - 0.01) <= 1 / s.n

    def test_empty(self):
        with pytest.raises(ValueError):
            set_measure_empirical(np.zeros(0, dtype=bool))
