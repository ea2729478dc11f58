import math
from fractions import Fraction

import numpy as np
import pytest

from dynei.observables import ExceedanceSeries
from dynei.visits import (ClusterLaw, InsufficientDataError, ModelPmf, VisitHistogram, compound_poisson_pmf,
                          histogram_from_times, markov_alpha, markov_alpha_closed_form, markov_cluster_law,
                          pi_from_alpha, poisson_pmf, polya_aeppli_pmf, tv_distance, visit_histogram,
                          window_length)

K = np.arange(400)


class TestHistogram:
    def test_all_false(self):
        h = visit_histogram(np.zeros(10_000, dtype=bool), 0.01, 5, 10)
        assert h.counts.tolist() == [10] and h.window == 500

    def test_counts_sum(self):
        f = np.random.default_rng(0).random(10**5) < 0.01
        h = visit_histogram(f, 0.01, 5, 150)
        assert h.counts.sum() == 150 == h.n_windows

    def test_hand_example(self):
        # window floor(2/0.5) = 4
        f = np.array([1, 1, 0, 0, 0, 1, 0, 0, 1, 1, 1, 1], dtype=bool)
        h = visit_histogram(f, 0.5, 2, 3)
        assert h.counts.tolist() == [0, 1, 1, 0, 1]

    def test_from_series(self):
        s = ExceedanceSeries.from_flags([1, 0, 0, 1, 1, 0])
        assert visit_histogram(s, 0.5, 1, 3).counts.tolist() == [0, 3]

    def test_insufficient(self):
        with pytest.raises(InsufficientDataError):
            visit_histogram(np.zeros(100, dtype=bool), 0.01, 5, 2)

    def test_bad_measure(self):
        with pytest.raises(ValueError):
            window_length(5, 0)

    def test_iid_is_poisson(self):
        rng = np.random.default_rng(1)
        mu, t, nw = 0.005, 50, 10**5
        w = window_length(t, mu)
        counts = rng.binomial(w, mu, nw)
        h = VisitHistogram(t, w, np.bincount(counts), nw)
        assert tv_distance(h, ModelPmf("poisson", t)) <= 0.02
        assert abs(h.mean() - t) < 3 * math.sqrt(h.var() / nw)

    def test_merge(self):
        a = VisitHistogram(5, 10, [1, 2], 3)
        b = VisitHistogram(5, 10, [0, 0, 4], 4)
        m = a.merge(b)
        assert m.counts.tolist() == [1, 2, 4] and m.n_windows == 7
        with pytest.raises(ValueError):
            a.merge(VisitHistogram(5, 11, [1], 1))

    def test_consistency_check(self):
        with pytest.raises(ValueError):
            VisitHistogram(5, 10, [1, 2], 4)


class TestPoisson:
    def test_zero(self):
        assert poisson_pmf(50, 0) == pytest.approx(math.exp(-50), rel=1e-12)

    def test_normalised(self):
        assert abs(poisson_pmf(50, np.arange(201)).sum() - 1) < 1e-12

    def test_mode(self):
        assert int(np.argmax(poisson_pmf(50, K))) in (49, 50)


class TestPolyaAeppli:
    def test_theta_one_is_poisson(self):
        np.testing.assert_allclose(polya_aeppli_pmf(50, 1.0, K), poisson_pmf(50, K), atol=1e-9)

    def test_normalised(self):
        for theta in (0.25, 0.5926, 2 / 3, 1.0):
            assert abs(polya_aeppli_pmf(50, theta, np.arange(2000)).sum() - 1) < 1e-9

    def test_mean(self):
        p = polya_aeppli_pmf(50, 2 / 3, np.arange(2000))
        assert abs((np.arange(2000) * p).sum() - 50) < 1e-6

    def test_k_zero(self):
        assert polya_aeppli_pmf(10, 0.5, 0) == pytest.approx(math.exp(-5))

    def test_direct_sum(self):
        t, th, k = 3.0, 0.4, 5
        direct = math.exp(-th * t) * sum((1 - th) ** (k - j) * th**j * (th * t) ** j / math.factorial(j)
                                         * math.comb(k - 1, j - 1) for j in range(1, k + 1))
        assert polya_aeppli_pmf(t, th, k) == pytest.approx(direct, rel=1e-12)

    def test_theta_range(self):
        with pytest.raises(ValueError):
            polya_aeppli_pmf(50, 0.0, 3)
        with pytest.raises(ValueError):
            polya_aeppli_pmf(50, 1.2, 3)


class TestCompoundPoisson:
    @pytest.mark.parametrize("t", [1, 10, 50])
    @pytest.mark.parametrize("theta", [0.25, 0.5926, 1.0])
    def test_geometric_is_polya_aeppli(self, t, theta):
        law = ClusterLaw.geometric(theta)
        np.testing.assert_allclose(compound_poisson_pmf(t, law, K), polya_aeppli_pmf(t, theta, K), atol=1e-9)

    def test_delta_is_poisson(self):
        np.testing.assert_allclose(compound_poisson_pmf(50, ClusterLaw((1.0,)), K), poisson_pmf(50, K), atol=1e-12)

    def test_brute_convolution(self):
        law = ClusterLaw((0.5, 0.3, 0.2))
        t = 2.0
        lam = t / law.mean()
        # sum over the number of clusters of Poisson weights times n-fold convolutions
        conv = np.zeros(30)
        cur = np.zeros(30)
        cur[0] = 1.0
        pi = np.array([0, 0.5, 0.3, 0.2])
        for n in range(40):
            conv += math.exp(-lam) * lam**n / math.factorial(n) * cur
            cur = np.convolve(cur, pi)[:30]
        np.testing.assert_allclose(compound_poisson_pmf(t, law, np.arange(30)), conv, atol=1e-10)

    def test_large_rate(self):
        p = compound_poisson_pmf(600, ClusterLaw.geometric(0.5), np.arange(2500))
        assert abs(p.sum() - 1) < 1e-9


class TestLaws:
    def test_degenerate(self):
        with pytest.raises(ValueError):
            ClusterLaw((0.0, 0.0))

    def test_model_validation(self):
        with pytest.raises(ValueError):
            ModelPmf("compound_poisson", 50)
        with pytest.raises(ValueError):
            ModelPmf("negative_binomial", 50)

    def test_geometric_mean(self):
        assert ClusterLaw.geometric(0.4).mean() == pytest.approx(2.5)


class TestTv:
    def test_exact_match_is_zero(self):
        m = ModelPmf("poisson", 2.0)
        n = 10**6
        p = poisson_pmf(2.0, np.arange(60))
        counts = np.round(p * n).astype(np.int64)
        counts[0] += n - counts.sum()
        h = VisitHistogram(2.0, 10, counts, n)
        assert tv_distance(h, m) < 1e-5

    def test_poisson_sample(self):
        counts = np.random.default_rng(2).poisson(50, 10**5)
        h = VisitHistogram(50, 1000, np.bincount(counts), 10**5)
        assert tv_distance(h, ModelPmf("poisson", 50)) <= 0.02
        assert tv_distance(h, ModelPmf("polya_aeppli", 50, 0.5)) >= 0.1

    def test_range(self):
        h = VisitHistogram(50, 1000, [0, 0, 0, 5], 5)
        assert 0.99 < tv_distance(h, ModelPmf("poisson", 50)) <= 1


class TestAlpha:
    def test_first(self):
        assert markov_alpha(1, exact=True) == 1

    def test_second(self):
        assert markov_alpha(2, exact=True) == Fraction(11, 27)

    def test_against_cylinder_enumeration(self):
        # independent route: sum over all 3^(l-1) cylinders of T^(l-1) with their slopes and densities
        slopes = (3, 2, 3)
        h2 = (Fraction(9, 25), Fraction(36, 25), Fraction(36, 25))
        cover = ((0, 1, 2), (1, 2), (0, 1, 2))

        def integral(l):
            # words i_0 -> i_1 -> ... -> i_{l-1}; cylinder length = |I_{i_{l-1}}| / prod slopes before it
            total = Fraction(0)
            stack = [(i, (i,), Fraction(1)) for i in range(3)]
            while stack:
                i, word, prod = stack.pop()
                if len(word) == l:
                    length = Fraction(1, 3) / prod
                    total += h2[word[0]] * length / prod
                    continue
                for j in cover[i]:
                    stack.append((j, word + (j,), prod * slopes[i]))
            return total

        den = integral(1)
        for l in (1, 2, 3, 4, 5):
            assert markov_alpha(l, exact=True) == integral(l) / den

    def test_closed_form_cross_check(self):
        for l in range(1, 12):
            assert markov_alpha_closed_form(l) == pytest.approx(markov_alpha(l), rel=1e-9)

    def test_decreasing(self):
        a = [markov_alpha(l) for l in range(1, 30)]
        assert all(x > y > 0 for x, y in zip(a, a[1:]))

    def test_depth(self):
        with pytest.raises(ValueError):
            markov_alpha(500)
        with pytest.raises(ValueError):
            markov_alpha(0)


class TestPiFromAlpha:
    def test_geometric(self):
        th = 0.3
        a = [(1 - th) ** l for l in range(60)]
        law = pi_from_alpha(a)
        np.testing.assert_allclose(law.pi[:10], [th * (1 - th) ** (l - 1) for l in range(1, 11)], atol=1e-12)

    def test_markov_non_geometric(self):
        pi = markov_cluster_law().pi
        assert abs(pi[1] / pi[0] - pi[2] / pi[1]) > 1e-3

    def test_markov_cluster_mean(self):
        law = markov_cluster_law()
        assert law.deficit < 1e-6
        assert abs(sum(l * p for l, p in enumerate(law.pi, start=1)) - 1 / 0.5926) < 1e-3

    def test_no_clustering(self):
        with pytest.raises(ValueError):
            pi_from_alpha([1, 1, 1])

    def test_alpha_one(self):
        with pytest.raises(ValueError):
            pi_from_alpha([0.9, 0.5, 0.2])

    def test_markov_models_differ(self):
        k = np.arange(600)
        cp = compound_poisson_pmf(50, markov_cluster_law(), k)
        pa = polya_aeppli_pmf(50, 0.5926, k)
        # the two laws are close; the signature is real but small
        assert 0 < 0.5 * np.abs(cp - pa).sum() < 0.01
