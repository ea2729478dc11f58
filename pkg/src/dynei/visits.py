"""Visit counts over rescaled time windows and their candidate limit laws."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.special import gammaln, logsumexp, xlogy

from .observables import ExceedanceSeries


class InsufficientDataError(ValueError):
    pass


@dataclass
class VisitHistogram:
    """``counts[k]`` windows of ``window`` steps saw exactly ``k`` visits."""

    t: float
    window: int
    counts: np.ndarray
    n_windows: int

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.sum() != self.n_windows:
            raise ValueError("counts must add up to n_windows")

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.n_windows

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.counts.size)

    def mean(self) -> float:
        return float((self.support * self.counts).sum() / self.n_windows)

    def var(self) -> float:
        mu = self.mean()
        return float((((self.support - mu) ** 2) * self.counts).sum() / self.n_windows)

    def merge(self, other: "VisitHistogram") -> "VisitHistogram":
        if other.window != self.window:
            raise ValueError("cannot merge histograms with different windows")
        size = max(self.counts.size, other.counts.size)
        c = np.zeros(size, dtype=np.int64)
        c[: self.counts.size] += self.counts
        c[: other.counts.size] += other.counts
        return VisitHistogram(self.t, self.window, c, self.n_windows + other.n_windows)


def window_length(t: float, mu: float) -> int:
    if mu <= 0:
        raise ValueError("target measure must be positive")
    w = math.floor(t / mu)
    if w < 1:
        raise ValueError(f"t / mu = {t / mu} gives an empty window")
    return w


def histogram_from_times(times, n: int, mu: float, t: float, n_windows: int) -> VisitHistogram:
    """Histogram from sorted exceedance indices of a series of length ``n``."""
    w = window_length(t, mu)
    if n_windows < 1:
        raise ValueError("n_windows must be >= 1")
    if n_windows * w > n:
        raise InsufficientDataError(f"{n_windows} windows of {w} steps need {n_windows * w} points, have {n}")
    times = np.asarray(times, dtype=np.int64)
    times = times[times < n_windows * w]
    per_window = np.bincount(times // w, minlength=n_windows)
    return VisitHistogram(t, w, np.bincount(per_window), n_windows)


def visit_histogram(flags, mu: float, t: float, n_windows: int) -> VisitHistogram:
    """Counts of flagged points in ``n_windows`` consecutive disjoint windows of ``floor(t/mu)`` steps."""
    if isinstance(flags, ExceedanceSeries):
        return histogram_from_times(flags.times, flags.n, mu, t, n_windows)
    f = np.asarray(flags, dtype=bool)
    return histogram_from_times(np.flatnonzero(f), f.size, mu, t, n_windows)


# -- limit laws ----------------------------------------------------------------


def poisson_pmf(t: float, k):
    if t <= 0:
        raise ValueError("t must be > 0")
    k = np.asarray(k)
    out = np.exp(xlogy(k, t) - t - gammaln(k + 1.0))
    return float(out) if out.ndim == 0 else out


def polya_aeppli_pmf(t: float, theta: float, k):
    """Compound Poisson law with rate ``theta t`` and geometric cluster sizes of parameter ``theta``."""
    if t <= 0:
        raise ValueError("t must be > 0")
    if not 0 < theta <= 1:
        raise ValueError("theta must lie in (0, 1]")
    ks = np.atleast_1d(np.asarray(k, dtype=np.int64))
    lam = theta * t
    out = np.empty(ks.size)
    for i, kk in enumerate(ks):
        if kk == 0:
            out[i] = math.exp(-lam)
            continue
        j = np.arange(1, kk + 1)
        terms = (xlogy(kk - j, 1.0 - theta) + j * math.log(theta) + j * math.log(lam)
                 - gammaln(j + 1.0) + gammaln(kk) - gammaln(j) - gammaln(kk - j + 1.0))
        out[i] = math.exp(logsumexp(terms) - lam)
    return float(out[0]) if np.ndim(k) == 0 else out.reshape(np.shape(k))


@dataclass(frozen=True)
class ClusterLaw:
    """Cluster-size probabilities ``pi[l-1] = P(size = l)``; ``deficit`` is the truncated mass."""

    pi: tuple
    deficit: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "pi", tuple(float(v) for v in self.pi))
        if not self.pi or any(v < 0 for v in self.pi):
            raise ValueError("cluster law needs nonnegative probabilities")
        if sum(self.pi) <= 0:
            raise ValueError("degenerate cluster law")
        if sum(self.pi) > 1 + 1e-9:
            raise ValueError("cluster probabilities exceed 1")

    @classmethod
    def geometric(cls, theta: float, l_max: int = 2000) -> "ClusterLaw":
        l = np.arange(1, l_max + 1)
        pi = theta * (1 - theta) ** (l - 1)
        return cls(tuple(pi), float(max(0.0, 1 - pi.sum())))

    @property
    def normalised(self) -> np.ndarray:
        p = np.array(self.pi)
        return p / p.sum()

    def mean(self) -> float:
        p = self.normalised
        return float((np.arange(1, p.size + 1) * p).sum())


def compound_poisson_pmf(t: float, law: ClusterLaw, k):
    """Poisson(``t / E[L]``) sum of i.i.d. cluster sizes ``L ~ law``, mean ``t``.

    Evaluated by the Panjer recursion ``P(n) = (lam/n) sum_l l pi_l P(n-l)``
    with running rescaling so large rates do not underflow.
    """
    if t <= 0:
        raise ValueError("t must be > 0")
    pi = law.normalised
    lam = t / law.mean()
    ks = np.atleast_1d(np.asarray(k, dtype=np.int64))
    kmax = int(ks.max())
    lp = np.arange(1, pi.size + 1) * pi
    P = np.zeros(kmax + 1)
    P[0] = 1.0
    log_scale = 0.0
    for n in range(1, kmax + 1):
        L = min(n, pi.size)
        P[n] = lam / n * np.dot(lp[:L], P[n - 1 :: -1][:L])
        if P[n] > 1e250:
            P[: n + 1] *= 1e-250
            log_scale += 250 * math.log(10)
    with np.errstate(divide="ignore"):
        out = np.exp(np.log(P[ks]) + log_scale - lam)
    return float(out[0]) if np.ndim(k) == 0 else out.reshape(np.shape(k))


@dataclass(frozen=True)
class ModelPmf:
    """One candidate visit law: ``kind`` is ``poisson``, ``polya_aeppli`` or ``compound_poisson``."""

    kind: str
    t: float
    theta: float = 1.0
    law: ClusterLaw | None = None

    def __post_init__(self):
        if self.kind not in ("poisson", "polya_aeppli", "compound_poisson"):
            raise ValueError(f"unknown model {self.kind!r}")
        if self.kind == "compound_poisson" and self.law is None:
            raise ValueError("compound Poisson model needs a cluster law")

    def pmf(self, k):
        if self.kind == "poisson":
            return poisson_pmf(self.t, k)
        if self.kind == "polya_aeppli":
            return polya_aeppli_pmf(self.t, self.theta, k)
        return compound_poisson_pmf(self.t, self.law, k)

    @property
    def label(self) -> str:
        if self.kind == "poisson":
            return f"poisson({self.t:g})"
        if self.kind == "polya_aeppli":
            return f"polya_aeppli({self.t:g},{self.theta:.4f})"
        return f"compound_poisson({self.t:g})"


def tv_distance(hist: VisitHistogram, model: ModelPmf) -> float:
    """Total variation between the empirical frequencies and the model.

    The model mass beyond the largest observed count is lumped into one term.
    """
    if hist.n_windows < 1:
        raise ValueError("empty histogram")
    f = hist.frequencies
    p = np.asarray(model.pmf(hist.support), dtype=float)
    tail = max(0.0, 1.0 - p.sum())
    return float(0.5 * (np.abs(f - p).sum() + tail))


# -- cluster laws from return statistics ------------------------------------------


def pi_from_alpha(alpha: Sequence[float]) -> ClusterLaw:
    """``pi_l = (a_l - 2 a_{l+1} + a_{l+2}) / (a_1 - a_2)`` for ``l = 1 .. len(alpha) - 2``.

    ``alpha[0]`` is ``a_1``, which must equal 1.
    """
    a = np.asarray([float(v) for v in alpha])
    if a.size < 3:
        raise ValueError("need at least three alpha values")
    if abs(a[0] - 1) > 1e-12:
        raise ValueError("alpha_1 must equal 1")
    if np.any(np.diff(a) > 1e-15):
        raise ValueError("alpha must be nonincreasing")
    denom = a[0] - a[1]
    if denom <= 0:
        raise ValueError("alpha_1 == alpha_2: no clustering, the cluster law is degenerate")
    pi = (a[:-2] - 2 * a[1:-1] + a[2:]) / denom
    pi = np.maximum(pi, 0.0)
    return ClusterLaw(tuple(pi), float(max(0.0, 1.0 - pi.sum())))


_MARKOV_H2 = (Fraction(9, 25), Fraction(36, 25), Fraction(36, 25))
_MARKOV_SLOPE = (3, 2, 3)
# interval j is covered by the image of interval i
_MARKOV_COVER = ((0, 1, 2), (1, 2), (0, 1, 2))


def markov_alpha(l: int, exact: bool = False, max_depth: int = 400):
    """``alpha_l = int h^2 / |DT^{l-1}| / int h^2`` for the three-branch Markov map.

    The integral is accumulated per partition interval: with
    ``g_l(i) = int_{I_i} |DT^l|^{-1}``, the change of variables ``y = T x`` on
    the linear branch over ``I_i`` gives ``g_l(i) = s_i^{-2} sum_{j covered} g_{l-1}(j)``,
    which collects all ``3^l`` cylinders exactly. ``exact=True`` returns a Fraction.
    """
    if l < 1:
        raise ValueError("l must be >= 1")
    if l > max_depth:
        raise ValueError(f"l={l} exceeds the configured depth {max_depth}")
    g = [Fraction(1, 3)] * 3
    for _ in range(l - 1):
        g = [sum((g[j] for j in _MARKOV_COVER[i]), Fraction(0)) / _MARKOV_SLOPE[i] ** 2 for i in range(3)]
    num = sum(h * gi for h, gi in zip(_MARKOV_H2, g))
    den = sum(h for h in _MARKOV_H2) / 3
    a = num / den
    return a if exact else float(a)


def markov_alpha_closed_form(l: int) -> float:
    """Closed form for ``alpha_{k+1}`` (``k = l - 1``) divided by its value at ``k = 0``."""
    k = l - 1
    r = math.sqrt(145.0)

    def raw(k):
        return ((3 * r - 37) * (17 - r) ** k + (37 + 3 * r) * (17 + r) ** k) / (2 * 72**k * r)

    return raw(k) / raw(0)


def markov_cluster_law(l_max: int = 60) -> ClusterLaw:
    return pi_from_alpha([markov_alpha(l) for l in range(1, l_max + 3)])
