"""A scenario couples a map, a perturbation scheme and a target into observable series."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from ..dynamics import (DEFAULT_BURN_IN, DEFAULT_CHUNK, MapSpec, NoNoise, OrbitStream, Scheme,
                        TrajectoryConfig)
from ..observables import (DEFAULT_CAP, Diagonal, ExceedanceSeries, Fixed, empirical_quantile,
                           exceedances, observe_dei, observe_fixed, observe_moving)
from ..visits import VisitHistogram, histogram_from_times, window_length

# replica keys at and above this offset are reserved for pilot runs
PILOT_OFFSET = 2**32


@dataclass(frozen=True)
class Scenario:
    map: MapSpec
    scheme: Scheme = field(default_factory=NoNoise)
    target: object = field(default_factory=lambda: Fixed(0.0))
    shared_noise: bool = False
    burn_in: int = DEFAULT_BURN_IN
    initial: object = None
    cap: float = DEFAULT_CAP
    chunk_size: int = DEFAULT_CHUNK

    @property
    def components(self) -> int:
        return self.target.k if isinstance(self.target, Diagonal) else 1

    def with_(self, **kw) -> "Scenario":
        return replace(self, **kw)

    def value_stream(self, seed: int = 0, replica: int = 0) -> Iterator[np.ndarray]:
        """Endless stream of observable chunks for one replica."""
        cfg = TrajectoryConfig(1, self.burn_in, seed, replica, self.initial)
        orbit = OrbitStream(self.map, self.scheme, cfg, self.components, self.shared_noise)
        orbit.skip(self.burn_in, self.chunk_size)
        fixed = isinstance(self.target, Fixed)
        draw = None if fixed or isinstance(self.target, Diagonal) else self.target.sampler(seed, replica)
        while True:
            x = orbit.next(self.chunk_size)
            if isinstance(self.target, Diagonal):
                yield observe_dei(x, cap=self.cap)
                continue
            x = x[:, 0]
            if fixed:
                yield observe_fixed(x, self.target.z, self.cap)
            else:
                yield observe_moving(x, self.target, cap=self.cap, sampler=draw)

    def values(self, n: int, seed: int = 0, replica: int = 0) -> np.ndarray:
        out = np.empty(n)
        pos = 0
        for chunk in self.value_stream(seed, replica):
            c = min(chunk.size, n - pos)
            out[pos : pos + c] = chunk[:c]
            pos += c
            if pos == n:
                return out
        raise AssertionError("unreachable")

    def series(self, n: int, p: float, seed: int = 0, replica: int = 0,
               keep_values: bool = False) -> ExceedanceSeries:
        """Exceedances over the empirical p-quantile of the replica's own ``n`` values."""
        v = self.values(n, seed, replica)
        return exceedances(v, empirical_quantile(v, p), p, keep_values)

    def pilot_threshold(self, p: float, n_pilot: int, seed: int = 0, replica: int = 0) -> float:
        """p-quantile of an independent pilot orbit."""
        return empirical_quantile(self.values(n_pilot, seed, PILOT_OFFSET + replica), p)

    def stream_exceedances(self, u: float, n: int, seed: int = 0, replica: int = 0,
                           sample: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Indices of values ``>= u`` among the first ``n`` points, without storing the series.

        Also returns the first ``sample`` values of the same orbit.
        """
        times, head = [], []
        pos = 0
        for chunk in self.value_stream(seed, replica):
            c = min(chunk.size, n - pos)
            chunk = chunk[:c]
            if pos < sample:
                head.append(chunk[: sample - pos])
            times.append(np.flatnonzero(chunk >= u) + pos)
            pos += c
            if pos == n:
                break
        head_arr = np.concatenate(head) if head else np.empty(0)
        return np.concatenate(times), head_arr


@dataclass
class VisitRun:
    histogram: VisitHistogram
    u: float
    mu: float
    n_points: int
    series: ExceedanceSeries


def visit_run(sc: Scenario, t: float, n_windows: int, p: float, seed: int = 0, replica: int = 0,
              n_pilot: int = 10**6) -> VisitRun:
    """Visit histogram over consecutive windows of one long orbit.

    The threshold is the p-quantile of an independent pilot orbit. The target
    measure is the exceedance rate of the main orbit itself, and the orbit is
    extended until it holds ``n_windows`` windows of ``floor(t / mu)`` steps.
    """
    u = sc.pilot_threshold(p, n_pilot, seed, replica)
    need = int(math.ceil(n_windows * t / (1.0 - p) * 1.02))
    stream = sc.value_stream(seed, replica)
    times, n = [], 0
    while True:
        while n < need:
            chunk = next(stream)
            times.append(np.flatnonzero(chunk >= u) + n)
            n += chunk.size
        all_times = np.concatenate(times)
        if all_times.size == 0:
            raise ValueError("no visits to the target set in the main run")
        mu = all_times.size / n
        w = window_length(t, mu)
        if n_windows * w <= n:
            break
        need = int(n_windows * w * 1.01)
    hist = histogram_from_times(all_times, n, mu, t, n_windows)
    return VisitRun(hist, u, mu, n, ExceedanceSeries(all_times, n, u, p))


def restart_visit_run(sc: Scenario, t: float, n_runs: int, p: float, seed: int = 0,
                      n_pilot: int = 10**6) -> VisitHistogram:
    """Visit histogram from independent restarts: one window per fresh orbit.

    The threshold and target measure both come from the pilot orbit.
    """
    pilot = sc.values(n_pilot, seed, PILOT_OFFSET)
    u = empirical_quantile(pilot, p)
    mu = float(np.mean(pilot >= u))
    w = window_length(t, mu)
    counts = np.zeros(n_runs, dtype=np.int64)
    small = sc.with_(chunk_size=min(sc.chunk_size, w))
    for r in range(n_runs):
        counts[r] = np.count_nonzero(small.values(w, seed, r) >= u)
    return VisitHistogram(t, w, np.bincount(counts), n_runs)


def same_orbit_run(sc: Scenario, t: float, n_points: int, p: float, seed: int = 0,
                   replica: int = 0, head: int = 10**7) -> VisitRun:
    """Threshold, extremal index and visit histogram all from one orbit.

    The threshold is the p-quantile of the first ``head`` values; the target
    measure is the exceedance rate over all ``n_points``, and the histogram
    uses as many whole windows as fit.
    """
    head = min(head, n_points)
    v = sc.values(head, seed, replica)
    u = empirical_quantile(v, p)
    del v
    times, _ = sc.stream_exceedances(u, n_points, seed, replica)
    if times.size == 0:
        raise ValueError("no visits to the target set")
    mu = times.size / n_points
    w = window_length(t, mu)
    hist = histogram_from_times(times, n_points, mu, t, n_points // w)
    return VisitRun(hist, u, mu, n_points, ExceedanceSeries(times, n_points, u, p))
