"""Compiled inner loops for orbit generation.

Integer-slope circle maps run on the fixed-point grid ``x = K / 2**64`` with
wrapping ``uint64`` arithmetic. The low-order digits that a finite grid would
lose are re-injected at every step as a uniform "carry" digit, which is exactly
what a Lebesgue-typical initial condition supplies. This keeps the doubling map
from collapsing onto 0 the way floating point iteration does.

The three-branch Markov map uses the grid ``x = K / (3 * 2**61)`` so that the
breakpoints 1/3 and 2/3 are grid points.
"""

import numpy as np
from numba import njit

INV53 = 2.0 ** -53

MARKOV_SCALE = 3 * 2**61
_THIRD = 2**61
_TWO_THIRDS = 2**62


@njit(cache=True)
def affine_orbit(state, slopes, offsets, u_sel, cw, step0, period, carry, noise, omega, alpha, out):
    """Iterate ``x -> a_i x + b_i + omega (+ noise) mod 1`` on the 2**64 grid.

    Map ``i`` is chosen by comparing ``u_sel[t, j]`` with the cumulative
    weights ``cw[r]``, where row ``r`` is the weight block of global step
    ``step0 + t`` (blocks of ``period`` steps, counted from the block of
    ``step0``). ``u_sel`` and ``noise`` may have zero rows, meaning "map 0"
    and "no noise". ``out[t]`` receives the state *before* step ``t``.
    Returns the advanced rotation phase.
    """
    n, k = out.shape
    m = cw.shape[1]
    use_sel = u_sel.shape[0] > 0
    use_noise = noise.shape[0] > 0
    shift = np.uint64(11)
    b0 = step0 // period
    for t in range(n):
        r = (step0 + t) // period - b0
        for j in range(k):
            K = state[j]
            out[t, j] = (K >> shift) * INV53
            i = 0
            if use_sel:
                u = u_sel[t, j]
                while i < m - 1 and u >= cw[r, i]:
                    i += 1
            a = slopes[i]
            c = np.uint64(np.int64(carry[t, j] * a))
            K = K * np.uint64(a) + c + offsets[i] + omega
            if use_noise:
                K = K + noise[t, j]
            state[j] = K
        omega = omega + alpha
    return omega


@njit(cache=True)
def markov_orbit(state, carry, noise, out):
    """Iterate the three-branch Markov map on the ``3 * 2**61`` grid."""
    n, k = out.shape
    use_noise = noise.shape[0] > 0
    S = MARKOV_SCALE
    for t in range(n):
        for j in range(k):
            K = state[j]
            out[t, j] = (K >> 10) / (3.0 * 2.0**51)
            u = carry[t, j]
            if K < _THIRD:
                K = 3 * K + np.int64(u * 3.0)
            elif K < _TWO_THIRDS:
                K = S - 2 * (K - _THIRD) - (1 + np.int64(u * 2.0))
            else:
                K = 3 * (K - _TWO_THIRDS) + np.int64(u * 3.0)
            if use_noise:
                K = K + noise[t, j]
                if K < 0:
                    K += S
                elif K >= S:
                    K -= S
            state[j] = K
    return 0


@njit(cache=True)
def cat_orbit(state, noise, out):
    """Arnold cat map ``(x, y) -> (x + y, x + 2y)`` on the 2**64 torus grid."""
    n, k, _ = out.shape
    use_noise = noise.shape[0] > 0
    shift = np.uint64(11)
    for t in range(n):
        for j in range(k):
            X = state[j, 0]
            Y = state[j, 1]
            out[t, j, 0] = (X >> shift) * INV53
            out[t, j, 1] = (Y >> shift) * INV53
            X2 = X + Y
            Y2 = X2 + Y
            if use_noise:
                X2 = X2 + noise[t, j, 0]
                Y2 = Y2 + noise[t, j, 1]
            state[j, 0] = X2
            state[j, 1] = Y2
    return 0


@njit(cache=True)
def float_orbit(state, kind, slope, offset, carry, noise, out):
    """Floating point fallback: ``kind`` 0 is the Gauss map, 1 is ``a x + b``."""
    n, k = out.shape
    use_noise = noise.shape[0] > 0
    for t in range(n):
        for j in range(k):
            x = state[j]
            out[t, j] = x
            if kind == 0:
                if x == 0.0:
                    # measure-zero escape: restart from a fresh uniform point
                    x = carry[t, j]
                else:
                    y = 1.0 / x
                    x = y - np.floor(y)
            else:
                y = slope * x + offset
                x = y - np.floor(y)
            if use_noise:
                x = x + noise[t, j]
                x = x - np.floor(x)
            if x >= 1.0:
                x = 0.0
            state[j] = x
    return 0
