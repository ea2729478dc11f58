"""Distance observables, moving targets, thresholds and exceedance bookkeeping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .dynamics import TARGET, MapSpec, OrbitStream, TrajectoryConfig, rng_stream

# -log of the smallest subnormal double is ~744.4, so no genuine distance reaches this
DEFAULT_CAP = 745.0


def _as_point(z):
    if isinstance(z, (tuple, list, np.ndarray)):
        return np.array([float(c) for c in z])
    return float(z)


def distance(a, b, dim: int | None = None):
    """Circle metric per coordinate, combined Euclidean on the torus.

    ``dim`` is the phase-space dimension; arrays of d-dimensional points carry
    the coordinates on their last axis. Without ``dim``, a tuple or list
    argument is read as one point and fixes the dimension, otherwise points
    are on the circle.
    """
    if dim is None:
        dim = next((len(v) for v in (a, b) if isinstance(v, (tuple, list))), 1)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if dim > 1 and (a.shape[-1:] != (dim,) or b.shape[-1:] != (dim,)):
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape} for dim={dim}")
    g = np.abs(a - b)
    if g.size and g.max() >= 1.0:
        g %= 1.0
    g = np.minimum(g, 1.0 - g)
    if dim == 1:
        return g
    return np.sqrt((g * g).sum(axis=-1))


def neg_log(d, cap: float = DEFAULT_CAP):
    d = np.asarray(d, dtype=float)
    with np.errstate(divide="ignore"):
        phi = -np.log(d)
    return np.minimum(phi, cap)


def observe_fixed(x, z, cap: float = DEFAULT_CAP) -> np.ndarray:
    """``-log d(x_i, z)`` with exact hits mapped to ``cap``."""
    z = _as_point(z)
    return neg_log(distance(x, z, dim=np.size(z)), cap)


# -- targets ---------------------------------------------------------------


@dataclass(frozen=True)
class Fixed:
    z: object

    def sampler(self, seed: int = 0, replica: int = 0) -> Callable[[int], np.ndarray]:
        z = _as_point(self.z)
        if np.ndim(z):
            return lambda n: np.broadcast_to(z, (n, len(z)))
        return lambda n: np.full(n, z)


@dataclass(frozen=True)
class MovingDiscrete:
    """Target drawn i.i.d. each step from ``points`` with ``weights``."""

    points: tuple
    weights: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if not self.points:
            raise ValueError("need at least one target point")
        w = self.weights
        if w is None:
            w = (1.0 / len(self.points),) * len(self.points)
        w = tuple(float(v) for v in w)
        if len(w) != len(self.points) or min(w) < 0 or abs(sum(w) - 1.0) > 1e-12:
            raise ValueError("weights must be a probability vector matching the points")
        object.__setattr__(self, "weights", w)

    def sampler(self, seed: int = 0, replica: int = 0):
        pts = np.array([_as_point(p) for p in self.points])
        if len(pts) == 1:
            return Fixed(self.points[0]).sampler()
        rng = rng_stream(seed, replica, TARGET)
        cw = np.cumsum(self.weights)

        def draw(n):
            idx = np.minimum(np.searchsorted(cw, rng.random(n), side="right"), len(cw) - 1)
            return pts[idx]

        return draw


@dataclass(frozen=True)
class MovingUniform:
    """Target drawn uniformly on ``[z0 - eps, z0 + eps]`` (mod 1) each step."""

    z0: float
    eps: float

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError("eps must be >= 0")

    def sampler(self, seed: int = 0, replica: int = 0):
        z0 = float(self.z0)
        if self.eps == 0:
            return Fixed(z0).sampler()
        rng = rng_stream(seed, replica, TARGET)
        return lambda n: (z0 + rng.uniform(-self.eps, self.eps, n)) % 1.0


@dataclass(frozen=True)
class MovingMapDriven:
    """Target ``z0 - eps + 2 eps y_n`` where ``y_{n+1} = f(y_n)`` moves on [0, 1).

    ``initial`` is the starting ``y``; ``None`` draws it from the uniform law.
    """

    z0: float
    eps: float
    f: MapSpec = field(default_factory=MapSpec.doubling)
    initial: object = None

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be > 0")
        if self.f.dim != 1:
            raise ValueError("the driving map must be one-dimensional")

    def sampler(self, seed: int = 0, replica: int = 0):
        # the driving orbit gets its own seed branch so it never reuses the state streams
        cfg = TrajectoryConfig(1, 0, int(rng_stream(seed, replica, TARGET).integers(2**63)), replica,
                               self.initial)
        stream = OrbitStream(self.f, None, cfg)
        lo, width = float(self.z0) - self.eps, 2 * self.eps
        return lambda n: (lo + width * stream.next(n)[:, 0]) % 1.0


@dataclass(frozen=True)
class Observational:
    """Observation noise: the state is seen as ``x + xi``, ``xi`` uniform on [-eps, eps]."""

    z0: float
    eps: float

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError("eps must be >= 0")

    def sampler(self, seed: int = 0, replica: int = 0):
        # the distance to z0 of x + xi equals the distance of x to z0 - xi
        return MovingUniform(self.z0, self.eps).sampler(seed, replica)


@dataclass(frozen=True)
class Diagonal:
    """Neighbourhood of the diagonal of the k-fold product (see :func:`observe_dei`)."""

    k: int

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("Diagonal targets need k >= 2")


TargetSpec = Fixed | MovingDiscrete | MovingUniform | MovingMapDriven | Observational | Diagonal


def observe_moving(x, target, seed: int = 0, replica: int = 0, cap: float = DEFAULT_CAP,
                   sampler: Callable[[int], np.ndarray] | None = None) -> np.ndarray:
    """``-log d(x_i, z_i)`` with ``z_i`` drawn from ``target``.

    Pass a ``sampler`` from ``target.sampler(...)`` to continue a target
    sequence across successive chunks of one orbit.
    """
    if isinstance(target, Diagonal):
        raise ValueError("use observe_dei for diagonal targets")
    draw = sampler if sampler is not None else target.sampler(seed, replica)
    x = np.asarray(x, dtype=float)
    z = draw(len(x))
    return neg_log(distance(x, z, dim=x.shape[1] if x.ndim == 2 else 1), cap)


def observe_dei(xk, k: int | None = None, cap: float = DEFAULT_CAP) -> np.ndarray:
    """Product observable ``-log max_{i>=2} d(x_1, x_i)`` on k-fold orbits.

    ``xk`` has shape ``(n, k)`` or ``(n, k, 2)``; ``k`` defaults to the
    component count and otherwise selects the first ``k`` components.
    """
    xk = np.asarray(xk, dtype=float)
    if xk.ndim < 2:
        raise ValueError("product orbits need a component axis")
    k = xk.shape[1] if k is None else int(k)
    if k < 2:
        raise ValueError("the product observable needs k >= 2")
    if k > xk.shape[1]:
        raise ValueError(f"orbit has {xk.shape[1]} components, asked for {k}")
    ref = xk[:, :1]
    d = distance(xk[:, 1:k], ref, dim=xk.shape[2] if xk.ndim == 3 else 1)
    return neg_log(d.max(axis=1), cap)


# -- thresholds and exceedances --------------------------------------------


def _rank_index(n: int, p: float) -> int:
    return min(n - 1, math.floor(p * n + 1e-9))


def empirical_quantile(values, p: float) -> float:
    """Order statistic at 0-based rank ``floor(p n)`` of the sorted values.

    With distinct values exactly ``n - floor(p n)`` points reach the returned
    level, so the exceedance fraction is ``1 - p`` up to ``1/n``.
    """
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("empty series")
    r = _rank_index(v.size, p)
    return float(np.partition(v, r)[r])


@dataclass
class ExceedanceSeries:
    """Exceedances of one series over ``u`` stored as the sorted indices ``times``.

    ``values`` is kept when available; long streamed runs keep only the indices.
    """

    times: np.ndarray
    n: int
    u: float
    p: float
    values: np.ndarray | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.int64)
        if self.n < 1:
            raise ValueError("series length must be >= 1")
        if self.times.size and (self.times[0] < 0 or self.times[-1] >= self.n):
            raise ValueError("exceedance index outside the series")

    @property
    def flags(self) -> np.ndarray:
        f = np.zeros(self.n, dtype=bool)
        f[self.times] = True
        return f

    @property
    def count(self) -> int:
        return int(self.times.size)

    @classmethod
    def from_flags(cls, flags, u: float = math.nan, p: float = math.nan) -> "ExceedanceSeries":
        flags = np.asarray(flags, dtype=bool)
        return cls(np.flatnonzero(flags), flags.size, u, p)


def exceedances(values, u: float, p: float = math.nan, keep_values: bool = True) -> ExceedanceSeries:
    """Flag ``values >= u``."""
    if not math.isfinite(u):
        raise ValueError("threshold must be finite")
    v = np.asarray(values, dtype=float)
    return ExceedanceSeries(np.flatnonzero(v >= u), v.size, float(u), p, v if keep_values else None)


def threshold_exceedances(values, p: float, keep_values: bool = True) -> ExceedanceSeries:
    """Exceedances over the empirical p-quantile of the series itself."""
    return exceedances(values, empirical_quantile(values, p), p, keep_values)


def set_measure_empirical(flags) -> float:
    """Fraction of flagged points: the Monte Carlo measure of the target set."""
    if isinstance(flags, ExceedanceSeries):
        return flags.count / flags.n
    f = np.asarray(flags, dtype=bool)
    if f.size == 0:
        raise ValueError("empty flags")
    return float(f.mean())


def four_point_targets(z0: Fraction | float = Fraction(2, 11)) -> MovingDiscrete:
    """Four equally weighted targets for the doubling map: both preimages of ``z0``, ``z0`` and its image.

    ``z0`` must not be periodic for the doubling map with period <= 2 or the
    image of its image would fall back on the set.
    """
    z0 = Fraction(z0)
    pts = (z0 / 2, (z0 + 1) / 2, z0, (2 * z0) % 1)
    if len(set(pts)) != 4 or (4 * z0) % 1 in pts:
        raise ValueError(f"z0={z0} does not give four distinct points with T(z3) off the set")
    return MovingDiscrete(pts)
