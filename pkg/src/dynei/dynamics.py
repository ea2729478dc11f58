"""Base maps, random perturbation schemes and seeded orbit generation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence, Union

import numpy as np

from . import _kernels

Number = Union[float, Fraction, int]

DEFAULT_BURN_IN = 1000
DEFAULT_CHUNK = 2**20

# purpose keys for independent RNG streams derived from one seed
INIT, CARRY, SELECT, NOISE, WEIGHTS, TARGET = range(6)

CAT_LAMBDA = (3.0 + math.sqrt(5.0)) / 2.0

_TWO64 = 2**64


class BranchBoundaryError(ValueError):
    """An orbit hit a point where the map is not differentiable."""


class UnsupportedMapError(NotImplementedError):
    pass


def rng_stream(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator for ``(seed, key...)``; distinct keys never overlap."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class MapSpec:
    """A deterministic map of the circle, the torus, or the unit interval.

    ``kind`` is one of ``"affine"`` (``slope * x + offset mod 1``), ``"gauss"``,
    ``"cat"`` or ``"markov"`` (the three-branch Markov map with slopes 3, -2, 3).
    Use the named constructors rather than building instances directly.
    """

    kind: str
    slope: Number = 1
    offset: Number = 0
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("affine", "gauss", "cat", "markov"):
            raise ValueError(f"unknown map kind {self.kind!r}")
        if self.kind == "affine":
            if self.slope < 1:
                raise ValueError("affine maps need slope >= 1")
            if not 0 <= self.offset < 1:
                raise ValueError("offset must lie in [0, 1)")

    @classmethod
    def doubling(cls) -> "MapSpec":
        return cls("affine", 2, 0, "2x mod 1")

    @classmethod
    def tripling(cls) -> "MapSpec":
        return cls("affine", 3, 0, "3x mod 1")

    @classmethod
    def affine(cls, slope: Number, offset: Number = 0) -> "MapSpec":
        return cls("affine", slope, offset, f"{slope}x+{offset} mod 1")

    @classmethod
    def gauss(cls) -> "MapSpec":
        return cls("gauss", name="1/x mod 1")

    @classmethod
    def cat(cls) -> "MapSpec":
        return cls("cat", name="cat map")

    @classmethod
    def markov(cls) -> "MapSpec":
        return cls("markov", name="three-branch Markov map")

    @property
    def dim(self) -> int:
        return 2 if self.kind == "cat" else 1

    @property
    def integer_affine(self) -> bool:
        return self.kind == "affine" and float(self.slope).is_integer()

    # -- pointwise evaluation (floats, numpy arrays or Fractions) ---------

    def __call__(self, x):
        return step(self, x)

    def local_derivative(self, x) -> float:
        """|DT(x)| for one-dimensional maps; the expanding eigenvalue for the cat map."""
        if self.kind == "affine":
            return float(abs(self.slope))
        if self.kind == "gauss":
            return float(1 / (x * x))
        if self.kind == "markov":
            return 2.0 if Fraction(1, 3) <= x < Fraction(2, 3) else 3.0
        return CAT_LAMBDA

    def is_breakpoint(self, x) -> bool:
        """True where |DT| has no value: a slope change, or 0 for the Gauss map.

        Jumps of the mod 1 reduction leave the slope unchanged on both sides
        and do not count.
        """
        if self.kind == "markov":
            return x == Fraction(1, 3) or x == Fraction(2, 3)
        if self.kind == "gauss":
            return x == 0
        return False

    def pieces(self) -> list[tuple[Fraction, Fraction, Fraction, Fraction]]:
        """Monotone branches as ``(left, right, |slope|, density)`` with constant density."""
        if self.integer_affine:
            return [(Fraction(0), Fraction(1), Fraction(self.slope), Fraction(1))]
        if self.kind == "markov":
            third = Fraction(1, 3)
            return [
                (Fraction(0), third, Fraction(3), Fraction(3, 5)),
                (third, 2 * third, Fraction(2), Fraction(6, 5)),
                (2 * third, Fraction(1), Fraction(3), Fraction(6, 5)),
            ]
        raise UnsupportedMapError(f"{self.name or self.kind} is not piecewise linear with constant density")


def _wrap(y):
    if isinstance(y, np.ndarray):
        y = np.mod(y, 1.0)
        y[y >= 1.0] = 0.0
        return y
    return y % 1


def step(m: MapSpec, x):
    """Apply ``m`` once; coordinates are reduced mod 1.

    ``x`` may be a float, a numpy array of states, or a ``Fraction``; exact
    rational inputs stay exact. Cat-map states carry their two coordinates on
    the last axis.
    """
    if m.kind == "cat":
        if isinstance(x, np.ndarray):
            if x.shape[-1] != 2:
                raise ValueError("cat map states need 2 coordinates on the last axis")
            out = np.empty_like(x, dtype=float)
            out[..., 0] = x[..., 0] + x[..., 1]
            out[..., 1] = x[..., 0] + 2 * x[..., 1]
            return _wrap(out)
        if np.ndim(x) != 1 or len(x) != 2:
            raise ValueError("cat map states need 2 coordinates")
        a, b = x
        return ((a + b) % 1, (a + 2 * b) % 1)
    if isinstance(x, np.ndarray) and x.ndim >= 1 and x.shape[-1:] == (2,) and x.ndim == 2:
        raise ValueError(f"{m.name} acts on one coordinate, got shape {x.shape}")
    if isinstance(x, (tuple, list)):
        raise ValueError(f"{m.name} acts on one coordinate, got {len(x)}")
    if m.kind == "affine":
        return _wrap(m.slope * x + m.offset)
    if m.kind == "gauss":
        if isinstance(x, np.ndarray):
            with np.errstate(divide="ignore"):
                y = np.where(x > 0, 1.0 / np.where(x > 0, x, 1.0), 0.0)
            return _wrap(y)
        if x == 0:
            raise BranchBoundaryError("Gauss map is undefined at 0")
        return _wrap(1 / x)
    # markov
    if isinstance(x, np.ndarray):
        return _wrap(np.where(x < 1 / 3, 3 * x, np.where(x < 2 / 3, 5 / 3 - 2 * x, 3 * x - 2)))
    third = Fraction(1, 3) if isinstance(x, Fraction) else 1 / 3
    if x < third:
        return _wrap(3 * x)
    if x < 2 * third:
        return _wrap(5 * third - 2 * x)
    return _wrap(3 * x - 2)


def derivative_magnitude(m: MapSpec, x, p: int) -> float:
    """|DT^p(x)| by the chain rule along the orbit of ``x``.

    For the cat map this is ``lambda**p`` with ``lambda`` the expanding eigenvalue.
    Raises BranchBoundaryError when the orbit lands on a non-differentiable point.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if m.kind == "cat":
        return CAT_LAMBDA**p
    if isinstance(x, float):
        x = Fraction(x)
    total = 1.0
    for _ in range(p):
        if m.is_breakpoint(x):
            raise BranchBoundaryError(f"orbit hits a branch boundary at {x}")
        total *= m.local_derivative(x)
        x = step(m, x)
    return total


def invariant_density(m: MapSpec, x) -> float:
    """Density of the absolutely continuous invariant measure at ``x``."""
    if m.kind == "cat" or m.integer_affine:
        return 1.0 if np.ndim(x) == 0 else np.ones(np.shape(x)[: (-1 if m.kind == "cat" else None)])
    if m.kind == "gauss":
        return 1.0 / ((1.0 + np.asarray(x, dtype=float)) * math.log(2.0)) if np.ndim(x) else 1.0 / ((1.0 + float(x)) * math.log(2.0))
    if m.kind == "markov":
        xa = np.asarray(x, dtype=float)
        h = np.where(xa < 1 / 3, 0.6, 1.2)
        return float(h) if h.ndim == 0 else h
    raise UnsupportedMapError(f"no invariant density known for {m.name}")


def sample_simplex_weights(m: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the (m-1)-simplex via normalised exponentials."""
    if m < 1:
        raise ValueError("m must be >= 1")
    e = rng.exponential(size=m)
    return e / e.sum()


def compose(maps: Sequence[MapSpec], indices: Sequence[int], x) -> list:
    """Orbit of ``x`` under ``maps[indices[0]]``, then ``maps[indices[1]]``, ...

    Returns ``[x, f_{i1}(x), f_{i2}(f_{i1}(x)), ...]``.
    """
    out = [x]
    for i in indices:
        x = step(maps[i], x)
        out.append(x)
    return out


# -- perturbation schemes ------------------------------------------------


@dataclass(frozen=True)
class NoNoise:
    pass


@dataclass(frozen=True)
class AdditiveUniform:
    """Add an independent uniform draw in [-eps, eps] after each step (wrapped mod 1)."""

    eps: float

    def __post_init__(self):
        if not 0 <= self.eps <= 0.5:
            raise ValueError("eps must lie in [0, 0.5]")


def _check_weights(weights, n):
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise ValueError(f"need {n} weights, got {w.shape}")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError("weights must be nonnegative and sum to 1")


@dataclass(frozen=True)
class IidSelection:
    """Pick ``maps[i]`` with probability ``weights[i]`` independently at each step."""

    maps: tuple
    weights: tuple

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        _check_weights(self.weights, len(self.maps))


@dataclass(frozen=True)
class QuenchedRotation:
    """Fibred system ``x -> T(x) + omega mod 1`` with ``omega -> omega + alpha``."""

    alpha: Number
    omega0: Number = 0.0


@dataclass(frozen=True)
class Sequential:
    """Like IidSelection, but the weights are redrawn uniformly on the simplex every ``period`` steps."""

    maps: tuple
    period: int = 10

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        if self.period < 1:
            raise ValueError("period must be >= 1")


Scheme = Union[NoNoise, AdditiveUniform, IidSelection, QuenchedRotation, Sequential]


@dataclass(frozen=True)
class TrajectoryConfig:
    """Length, burn-in and seeding of one orbit.

    ``initial=None`` draws the initial state uniformly; otherwise it is used
    as given (one value per component for product systems).
    """

    n_points: int = 10**7
    burn_in: int = DEFAULT_BURN_IN
    seed: int = 0
    replica: int = 0
    initial: object = field(default=None)

    def __post_init__(self):
        if self.n_points < 1:
            raise ValueError("n_points must be >= 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")


def _to_grid(x, scale: int) -> int:
    return math.floor(Fraction(x) % 1 * scale) % scale


class OrbitStream:
    """Stateful generator behind :func:`orbit`; ``next(n)`` returns the next ``n`` states.

    The output does not depend on how the stream is chunked: every source of
    randomness has its own counter-based generator consumed sequentially.
    """

    def __init__(self, m: MapSpec, scheme: Scheme | None, cfg: TrajectoryConfig,
                 components: int = 1, shared_noise: bool = False):
        scheme = NoNoise() if scheme is None else scheme
        self.map, self.scheme, self.cfg = m, scheme, cfg
        self.k = int(components)
        if self.k < 1:
            raise ValueError("components must be >= 1")
        self.shared = shared_noise
        key = (cfg.replica,)
        self._rng_carry = rng_stream(cfg.seed, *key, CARRY)
        self._rng_sel = rng_stream(cfg.seed, *key, SELECT)
        self._rng_noise = rng_stream(cfg.seed, *key, NOISE)
        self._rng_w = rng_stream(cfg.seed, *key, WEIGHTS)
        self._steps = 0
        self._block_w: dict[int, np.ndarray] = {}

        maps = list(scheme.maps) if isinstance(scheme, (IidSelection, Sequential)) else [m]
        for f in maps:
            if f.dim != m.dim:
                raise ValueError(f"scheme map {f.name} has dimension {f.dim}, expected {m.dim}")
        self._maps = maps
        if isinstance(scheme, QuenchedRotation) and not m.integer_affine:
            raise UnsupportedMapError("quenched rotations need an integer-slope base map")
        if len(maps) > 1 and not all(f.integer_affine for f in maps):
            raise UnsupportedMapError("random map selection needs integer-slope affine maps")

        if m.kind == "cat":
            self._mode = "cat"
        elif m.kind == "markov":
            self._mode = "markov"
        elif all(f.integer_affine for f in maps):
            self._mode = "affine"
        else:
            self._mode = "float"

        if self._mode == "affine":
            self._slopes = np.array([int(f.slope) for f in maps], dtype=np.int64)
            self._offsets = np.array([_to_grid(f.offset, _TWO64) for f in maps], dtype=np.uint64)
            if isinstance(scheme, QuenchedRotation):
                self._omega = np.uint64(_to_grid(scheme.omega0, _TWO64))
                self._alpha = np.uint64(_to_grid(scheme.alpha, _TWO64))
            else:
                self._omega = np.uint64(0)
                self._alpha = np.uint64(0)
        self.state = self._initial_state()

    def _initial_state(self):
        cfg, k = self.cfg, self.k
        rng = rng_stream(cfg.seed, cfg.replica, INIT)
        init = cfg.initial
        if init is not None:
            vals = list(init) if (np.ndim(init) > 0 and not (self.map.dim == 2 and np.ndim(init) == 1)) else [init] * k
            if len(vals) != k:
                raise ValueError(f"need {k} initial states, got {len(vals)}")
        if self._mode == "affine":
            if init is None:
                return rng.integers(0, _TWO64, size=k, dtype=np.uint64)
            return np.array([_to_grid(v, _TWO64) for v in vals], dtype=np.uint64)
        if self._mode == "markov":
            S = _kernels.MARKOV_SCALE
            if init is None:
                return rng.integers(0, S, size=k, dtype=np.int64)
            return np.array([_to_grid(v, S) for v in vals], dtype=np.int64)
        if self._mode == "cat":
            if init is None:
                return rng.integers(0, _TWO64, size=(k, 2), dtype=np.uint64)
            st = np.empty((k, 2), dtype=np.uint64)
            for j, v in enumerate(vals):
                if np.ndim(v) != 1 or len(v) != 2:
                    raise ValueError("cat map states need 2 coordinates")
                st[j] = [_to_grid(v[0], _TWO64), _to_grid(v[1], _TWO64)]
            return st
        if init is None:
            return rng.random(k)
        return np.array([float(v) % 1.0 for v in vals])

    # -- random inputs for one chunk ---------------------------------

    def _width(self):
        return 1 if self.shared else self.k

    def _spread(self, a):
        if self.shared and self.k > 1:
            reps = (1, self.k) + (1,) * (a.ndim - 2)
            return np.ascontiguousarray(np.tile(a, reps))
        return a

    def _selection(self, n):
        """Uniforms for map choice, cumulative weights per block, and the block length."""
        sch = self.scheme
        if isinstance(sch, IidSelection):
            cw = np.cumsum(sch.weights)[None, :]
            u = self._spread(self._rng_sel.random((n, self._width())))
            return u, cw, n + self._steps + 1
        if isinstance(sch, Sequential):
            m = len(sch.maps)
            b0 = self._steps // sch.period
            b1 = (self._steps + n - 1) // sch.period
            cached = self._block_w.get(b0)
            first_new = b0 + 1 if cached is not None else b0
            fresh = self._rng_w.exponential(size=(b1 - first_new + 1, m))
            fresh /= fresh.sum(axis=1, keepdims=True)
            W = fresh if cached is None else np.vstack([cached[None, :], fresh])
            self._block_w = {b1: W[-1]}
            u = self._spread(self._rng_sel.random((n, self._width())))
            return u, np.cumsum(W, axis=1), sch.period
        return np.zeros((0, self.k)), np.ones((1, 1)), n + self._steps + 1

    def _noise(self, n, scale):
        sch = self.scheme
        d = (2,) if self._mode == "cat" else ()
        if not isinstance(sch, AdditiveUniform) or sch.eps == 0:
            return np.zeros((0, self.k) + d, dtype=np.uint64 if scale == _TWO64 else (np.int64 if scale else float))
        xi = self._rng_noise.uniform(-sch.eps, sch.eps, size=(n, self._width()) + d)
        xi = self._spread(xi)
        if scale == _TWO64:
            return np.floor(xi * 2.0**64).astype(np.int64).view(np.uint64)
        if scale:
            return np.floor(xi * float(scale)).astype(np.int64)
        return xi

    def next(self, n: int) -> np.ndarray:
        """Next ``n`` states with shape ``(n, k)`` (1-D maps) or ``(n, k, 2)`` (cat map)."""
        k = self.k
        if self._mode == "affine":
            out = np.empty((n, k))
            carry = self._rng_carry.random((n, k))
            u, cw, period = self._selection(n)
            noise = self._noise(n, _TWO64)
            omega = _kernels.affine_orbit(self.state, self._slopes, self._offsets, u, cw,
                                          self._steps, period, carry, noise, self._omega,
                                          self._alpha, out)
            self._omega = np.uint64(int(omega) % _TWO64)
        elif self._mode == "markov":
            out = np.empty((n, k))
            carry = self._rng_carry.random((n, k))
            _kernels.markov_orbit(self.state, carry, self._noise(n, _kernels.MARKOV_SCALE), out)
        elif self._mode == "cat":
            out = np.empty((n, k, 2))
            _kernels.cat_orbit(self.state, self._noise(n, _TWO64), out)
        else:
            out = np.empty((n, k))
            carry = self._rng_carry.random((n, k))
            kind = 0 if self.map.kind == "gauss" else 1
            _kernels.float_orbit(self.state, kind, float(self.map.slope), float(self.map.offset),
                                 carry, self._noise(n, 0), out)
        self._steps += n
        return out

    def skip(self, n: int, chunk: int = DEFAULT_CHUNK) -> None:
        while n > 0:
            c = min(chunk, n)
            self.next(c)
            n -= c


def orbit(m: MapSpec, scheme: Scheme | None = None, cfg: TrajectoryConfig | None = None, *,
          components: int = 1, shared_noise: bool = False,
          chunk_size: int = DEFAULT_CHUNK) -> Iterator[np.ndarray]:
    """Yield the orbit of ``m`` under ``scheme`` in chunks, after discarding ``cfg.burn_in`` steps.

    Chunks have shape ``(c,)`` for one-dimensional maps and ``(c, 2)`` for the
    cat map. With ``components=k`` the k-fold product is generated and chunks
    gain a component axis: ``(c, k)`` or ``(c, k, 2)``. Components evolve with
    independent noise unless ``shared_noise`` is set. For IidSelection and
    Sequential schemes the scheme's maps drive the orbit and ``m`` only fixes
    the phase space.
    """
    cfg = TrajectoryConfig() if cfg is None else cfg
    stream = OrbitStream(m, scheme, cfg, components, shared_noise)
    stream.skip(cfg.burn_in, chunk_size)
    left = cfg.n_points
    while left > 0:
        c = min(chunk_size, left)
        block = stream.next(c)
        left -= c
        yield block if components > 1 else block[:, 0]


def trajectory(m: MapSpec, scheme: Scheme | None = None, cfg: TrajectoryConfig | None = None,
               **kw) -> np.ndarray:
    """The whole orbit as one array (see :func:`orbit` for shapes)."""
    return np.concatenate(list(orbit(m, scheme, cfg, **kw)))
