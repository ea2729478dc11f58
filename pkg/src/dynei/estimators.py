"""Extremal index estimators and the closed-form values they are checked against."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .dynamics import CAT_LAMBDA, MapSpec, UnsupportedMapError, derivative_magnitude, step
from .observables import ExceedanceSeries

DEFAULT_ORDER = 5

METHODS = ("suveges", "order_m", "from_qk")


class NoExceedanceError(ValueError):
    """The series has no exceedance, so every estimator has a zero denominator."""


def _check(s: ExceedanceSeries) -> None:
    if s.count == 0:
        raise NoExceedanceError("no exceedances above the threshold")


def _next_gaps(s: ExceedanceSeries) -> np.ndarray:
    # gap from each exceedance to the next one; the last has none
    g = np.empty(s.count, dtype=np.int64)
    g[:-1] = np.diff(s.times)
    g[-1:] = np.iinfo(np.int64).max
    return g


def _clip(v: float) -> float:
    return float(min(1.0, max(0.0, v)))


def theta_order_m(s: ExceedanceSeries, m: int = DEFAULT_ORDER) -> float:
    """Fraction of exceedances not followed by another within ``m`` steps, normalised by the exceedance rate.

    Only exceedances at indices ``i <= n-1-m`` are counted in the numerator,
    whose rate is taken over ``n - m`` points. ``m = 0`` gives 1.
    """
    _check(s)
    if m < 0:
        raise ValueError("m must be >= 0")
    if m == 0:
        return 1.0
    if s.n <= m:
        raise ValueError(f"series of length {s.n} is too short for order {m}")
    g = _next_gaps(s)
    a = np.count_nonzero((s.times <= s.n - 1 - m) & (g > m))
    return _clip((a / (s.n - m)) / (s.count / s.n))


def q_hat(s: ExceedanceSeries, j: int) -> float:
    """Rate of exceedances whose next exceedance comes exactly ``j + 1`` steps later."""
    _check(s)
    if j < 0:
        raise ValueError("j must be >= 0")
    if s.n <= j + 1:
        raise ValueError(f"series of length {s.n} is too short for q_{j}")
    g = _next_gaps(s)
    a = np.count_nonzero(g == j + 1)
    return _clip((a / (s.n - 1 - j)) / (s.count / s.n))


@dataclass(frozen=True)
class QkSpectrum:
    """Estimated ``q_0 .. q_{m-1}``, with replica standard deviations when averaged."""

    q: tuple
    std_dev: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(float(v) for v in self.q))
        if any(not 0 <= v <= 1 for v in self.q):
            raise ValueError("each q_j must lie in [0, 1]")

    @property
    def m(self) -> int:
        return len(self.q)


def qk_spectrum(s: ExceedanceSeries, m: int = DEFAULT_ORDER) -> QkSpectrum:
    return QkSpectrum(tuple(q_hat(s, j) for j in range(m)))


def theta_from_qk(q) -> float:
    """``1 - sum_j q_j`` clipped to [0, 1]."""
    vals = q.q if isinstance(q, QkSpectrum) else tuple(q)
    return _clip(1.0 - math.fsum(vals))


def suveges(s: ExceedanceSeries, p: float | None = None) -> float:
    """Maximum likelihood estimate from the inter-exceedance times.

    With ``T_i`` the gaps between successive exceedances and ``S_i = T_i - 1``,
    ``N`` is the number of gaps and ``N_c`` the number of gaps longer than one
    step (i.e. the number of cluster boundaries when clusters are maximal runs
    of consecutive exceedances). ``p`` defaults to the quantile stored on the
    series, or to the empirical non-exceedance rate when that is unknown.

    A single exceedance carries no clustering evidence and gives 1. When every
    gap is 1 the likelihood is maximised at 0.
    """
    _check(s)
    if p is None:
        p = s.p if s.p == s.p else 1.0 - s.count / s.n
    gaps = np.diff(s.times)
    n = gaps.size
    if n == 0:
        return 1.0
    S = gaps - 1
    nc = int(np.count_nonzero(S))
    tot = (1.0 - p) * float(S.sum())
    if nc == 0 or tot == 0:
        return 0.0
    b = tot + n + nc
    return _clip((b - math.sqrt(max(b * b - 8.0 * nc * tot, 0.0))) / (2.0 * tot))


def estimate(s: ExceedanceSeries, method: str = "order_m", m: int = DEFAULT_ORDER) -> float:
    method = method.replace("-", "_")
    if method == "suveges":
        return suveges(s)
    if method == "order_m":
        return theta_order_m(s, m)
    if method == "from_qk":
        return theta_from_qk(qk_spectrum(s, m))
    raise ValueError(f"unknown method {method!r}; choose from {METHODS}")


@dataclass(frozen=True)
class EIEstimate:
    value: float
    method: str
    std_dev: float
    n_replicas: int
    n_points: int
    p: float
    m: int = DEFAULT_ORDER
    replicas: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if not -1e-9 <= self.value <= 1 + 1e-9:
            raise ValueError("extremal index must lie in [0, 1]")


def ensemble_estimate(make_series: Callable[[int], ExceedanceSeries], method: str = "order_m",
                      m: int = DEFAULT_ORDER, n_replicas: int = 20) -> EIEstimate:
    """Mean and standard deviation of one estimator over ``n_replicas`` independent series.

    ``make_series(r)`` must return the exceedance series of replica ``r``.
    """
    if n_replicas < 2:
        raise ValueError("need at least 2 replicas")
    vals, n, p = [], 0, math.nan
    for r in range(n_replicas):
        s = make_series(r)
        vals.append(estimate(s, method, m))
        n, p = s.n, s.p
    v = np.array(vals)
    return EIEstimate(float(v.mean()), method.replace("-", "_"), float(v.std(ddof=1)),
                      n_replicas, n, p, m, tuple(vals))


def ensemble_qk(make_series: Callable[[int], ExceedanceSeries], m: int = DEFAULT_ORDER,
                n_replicas: int = 20) -> QkSpectrum:
    if n_replicas < 2:
        raise ValueError("need at least 2 replicas")
    rows = np.array([qk_spectrum(make_series(r), m).q for r in range(n_replicas)])
    return QkSpectrum(tuple(rows.mean(axis=0)), tuple(rows.std(axis=0, ddof=1)))


# -- closed forms ---------------------------------------------------------------


def _exact_point(m: MapSpec, z):
    if m.kind == "cat":
        if np.ndim(z) != 1 or len(z) != 2:
            raise ValueError("cat map points have 2 coordinates")
        return tuple(Fraction(c) for c in z)
    if np.ndim(z) != 0:
        raise ValueError(f"{m.name} points have 1 coordinate")
    return Fraction(z)


def _circle_gap(a, b) -> float:
    if isinstance(a, tuple):
        return max(_circle_gap(x, y) for x, y in zip(a, b))
    g = abs(a - b) % 1
    return float(min(g, 1 - g))


def minimal_period(m: MapSpec, z, max_period: int = 64, tol: float = 1e-12) -> int | None:
    """Smallest ``p <= max_period`` with ``T^p z = z`` (exact iteration, closure within ``tol``)."""
    z0 = _exact_point(m, z)
    x = z0
    for p in range(1, max_period + 1):
        x = step(m, x)
        if _circle_gap(x, z0) <= tol:
            return p
    return None


def _disk_ellipse_area(a: float, b: float) -> float:
    """Area of the unit disk intersected with the coaxial ellipse of semi-axes ``a < 1 < b``."""
    xs = math.sqrt((1 - 1 / b**2) / (1 / a**2 - 1 / b**2))

    def top(x):
        return min(math.sqrt(max(1 - x * x, 0.0)), b * math.sqrt(max(1 - (x / a) ** 2, 0.0)))

    val, _ = integrate.quad(top, 0.0, a, points=[xs], epsabs=1e-14, epsrel=1e-13, limit=200)
    return 4.0 * val


def theory_periodic_ei(m: MapSpec, z, p: int) -> float:
    """Extremal index at a periodic point of minimal period ``p``.

    One-dimensional maps: ``1 - 1/|DT^p(z)|``. For the cat map the return set
    of a ball is an ellipse with semi-axes ``r lambda^-p`` and ``r lambda^p``
    along the orthogonal eigendirections, so the index is one minus the
    fraction of the disk it covers.
    """
    if p < 1:
        raise ValueError("period must be >= 1")
    per = minimal_period(m, z, max_period=p)
    if per != p:
        raise ValueError(f"{z} is not a point of minimal period {p} for {m.name}")
    if m.kind == "cat":
        lam = CAT_LAMBDA**p
        return 1.0 - _disk_ellipse_area(1 / lam, lam) / math.pi
    return 1.0 - 1.0 / derivative_magnitude(m, _exact_point(m, z), p)


def theory_dei(m: MapSpec, k: int) -> float:
    """Dynamical extremal index of the k-fold product: ``1 - int h^k |DT|^{1-k} / int h^k``."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if m.kind == "gauss":
        def h(x):
            return 1.0 / ((1.0 + x) * math.log(2.0))
        num, _ = integrate.quad(lambda x: h(x) ** k * x ** (2 * (k - 1)), 0, 1, epsabs=1e-14)
        den, _ = integrate.quad(lambda x: h(x) ** k, 0, 1, epsabs=1e-14)
        return 1.0 - num / den
    if m.kind == "cat":
        raise UnsupportedMapError("the product formula needs a one-dimensional map")
    pcs = m.pieces()
    num = sum(h**k * (r - l) / s ** (k - 1) for l, r, s, h in pcs)
    den = sum(h**k * (r - l) for l, r, s, h in pcs)
    return float(1 - num / den)


def theory_dei_bernoulli(q0_unp: float, weights: Sequence[float], k):
    """``1 - q0_unp * sum_i w_i^k`` for maps chosen independently per component.

    Only words where every component uses the same map return to the
    diagonal; with weights ``(p, 1-p)`` this is ``p^k + (1-p)^k``.
    """
    if not 0 <= q0_unp <= 1:
        raise ValueError("q0_unp must lie in [0, 1]")
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
        raise ValueError("weights must be a probability vector")
    kk = np.asarray(k)
    out = 1.0 - q0_unp * (w[:, None] ** kk.ravel()[None, :]).sum(axis=0)
    return float(out[0]) if kk.ndim == 0 else out.reshape(kk.shape)


def theory_discrete_noise_qk(b, k: int, p0: float = 0.5) -> float:
    """``q_k`` for the maps ``2x`` (weight ``p0``) and ``2x + b`` with target 0.

    ``q_0 = p0 / 2`` for every ``b``. For ``b = 1/2`` the only returns are
    ``k`` steps of ``2x + 1/2`` followed by ``2x``, giving
    ``q_k = (1 - p0)^k p0 / 2^{k+1}``, i.e. ``4^{-(k+1)}`` for equal weights.
    Irrational ``b`` (any float other than 0.5 is treated as such) has no
    further returns. Exact rational ``b`` other than 1/2 is not covered.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if not 0 < b < 1:
        raise ValueError("b must lie in (0, 1)")
    if k == 0:
        return p0 / 2
    if b == 0.5:
        return (1 - p0) ** k * p0 / 2 ** (k + 1)
    if isinstance(b, (Fraction, int)):
        raise UnsupportedMapError("q_k for rational b other than 1/2 is not known in closed form")
    return 0.0


def theory_moving_discrete_qk(k: int) -> float:
    """``q_k`` for the four-point moving target of the doubling map (equal weights)."""
    if k == 0:
        return 1.5 * (1 / 4) ** 2
    if k == 1:
        return 6 * (1 / 4) ** 3 * (1 / 2) ** 2
    return 0.0
