"""Compiled per-trial loops.

All functions take an ``np.random.Generator`` and draw from it in a fixed
order, so a trial's output is a pure function of its generator state.
Subordinators are passed as a flat parameter vector (see ``pack``).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

STABLE = 0
TEMPERED = 1
GAMMA = 2

NO_TARGET = -1
HALFLINE = 0
SPHERE_EXTERIOR = 1
ANNULUS = 2
BALLS = 3

HALF_PI = 0.5 * math.pi
V_GUARD = 1e-12


def pack(family: int, g: float, stable_scale: float, mu: float,
         gamma_shape: float, gamma_scale: float, drift: float) -> np.ndarray:
    inv_g = 1.0 / g if g > 0 else 0.0
    power = (1.0 - g) / g if g > 0 else 0.0
    return np.array([family, g, stable_scale, mu, gamma_shape, gamma_scale, drift, inv_g, power],
                    dtype=np.float64)


@njit(cache=True, nogil=True)
def stable_transform(g, v, e):
    a = g * (v + HALF_PI)
    return math.sin(a) / math.cos(v) ** (1.0 / g) * (math.cos(v - a) / e) ** ((1.0 - g) / g)


@njit(cache=True, nogil=True, inline='always')
def _stable_unit_fast(gen, g, inv_g, power):
    # stable_transform with the two powers folded into one exp
    while True:
        v = math.pi * (gen.random() - 0.5)
        u = gen.random()
        if HALF_PI - abs(v) < V_GUARD:
            continue
        if u == 0.0:
            return 0.0
        a = g * (v + HALF_PI)
        return math.sin(a) * math.exp(power * math.log(math.cos(v - a) / -math.log(u))
                                      - inv_g * math.log(math.cos(v)))


@njit(cache=True, nogil=True)
def stable_unit(gen, g):
    return _stable_unit_fast(gen, g, 1.0 / g, (1.0 - g) / g)


@njit(cache=True, nogil=True, inline='always')
def increment(gen, sub):
    family = sub[0]
    if family == STABLE:
        return sub[2] * _stable_unit_fast(gen, sub[1], sub[7], sub[8]) + sub[6]
    if family == TEMPERED:
        while True:
            s = sub[2] * _stable_unit_fast(gen, sub[1], sub[7], sub[8])
            if gen.random() < math.exp(-sub[3] * s):
                return s + sub[6]
    return gen.gamma(sub[4], sub[5]) + sub[6]


@njit(cache=True, nogil=True)
def subordinator_sum(gen, sub, nsteps):
    total = 0.0
    for _ in range(nsteps):
        total += increment(gen, sub)
    return total


@njit(cache=True, nogil=True)
def _ball_hit(x, centers, l2, order, ukeys, starts, origin, h, ncell):
    d = x.shape[0]
    base = np.empty(d, dtype=np.int64)
    for j in range(d):
        c = math.floor((x[j] - origin) / h)
        if c < -1 or c > ncell:
            return False
        base[j] = c
    n_nb = 3 ** d
    for m in range(n_nb):
        key = 0
        stride = 1
        rem = m
        ok = True
        for j in range(d):
            c = base[j] + (rem % 3) - 1
            rem //= 3
            if c < 0 or c >= ncell:
                ok = False
                break
            key += c * stride
            stride *= ncell
        if not ok:
            continue
        pos = np.searchsorted(ukeys, key)
        if pos >= ukeys.shape[0] or ukeys[pos] != key:
            continue
        for q in range(starts[pos], starts[pos + 1]):
            i = order[q]
            r2 = 0.0
            for j in range(d):
                diff = x[j] - centers[i, j]
                r2 += diff * diff
            if r2 <= l2:
                return True
    return False


@njit(cache=True, nogil=True, inline='always')
def _simple_contains(x, geo, gp):
    if geo == HALFLINE:
        return x[0] <= -gp[0]
    if geo == NO_TARGET:
        return False
    r2 = 0.0
    for j in range(x.shape[0]):
        r2 += x[j] * x[j]
    if geo == SPHERE_EXTERIOR:
        return r2 >= gp[0] * gp[0]
    return gp[0] * gp[0] <= r2 and r2 <= gp[1] * gp[1]


@njit(cache=True, nogil=True)
def contains(x, geo, gp, centers, order, ukeys, starts):
    if geo == BALLS:
        # gp = [l, origin, cell size, ncell]
        return _ball_hit(x, centers, gp[0] * gp[0], order, ukeys, starts, gp[1], gp[2], int(gp[3]))
    return _simple_contains(x, geo, gp)


@njit(cache=True, nogil=True)
def contains_many(points, geo, gp, centers, order, ukeys, starts):
    out = np.empty(points.shape[0], dtype=np.bool_)
    for i in range(points.shape[0]):
        out[i] = contains(points[i], geo, gp, centers, order, ukeys, starts)
    return out


@njit(cache=True, nogil=True, inline='always')
def _outside_box(x, box):
    for j in range(x.shape[0]):
        if abs(x[j]) > box:
            return True
    return False


@njit(cache=True, nogil=True)
def _first_hit_simple(gen, sub, x, max_steps, geo, gp, box):
    d = x.shape[0]
    exited = False
    for k in range(1, max_steps + 1):
        sd = math.sqrt(2.0 * increment(gen, sub))
        for j in range(d):
            x[j] += sd * gen.standard_normal()
        if _simple_contains(x, geo, gp):
            return k, exited
        if box > 0.0 and not exited:
            exited = _outside_box(x, box)
    return -1, exited


@njit(cache=True, nogil=True)
def _first_hit_balls(gen, sub, x, max_steps, gp, centers, order, ukeys, starts, box):
    d = x.shape[0]
    exited = False
    l2 = gp[0] * gp[0]
    origin = gp[1]
    h = gp[2]
    ncell = int(gp[3])
    for k in range(1, max_steps + 1):
        sd = math.sqrt(2.0 * increment(gen, sub))
        for j in range(d):
            x[j] += sd * gen.standard_normal()
        if _ball_hit(x, centers, l2, order, ukeys, starts, origin, h, ncell):
            return k, exited
        if box > 0.0 and not exited:
            exited = _outside_box(x, box)
    return -1, exited


@njit(cache=True, nogil=True)
def first_hit(gen, sub, x0, max_steps, geo, gp, centers, order, ukeys, starts, box):
    """Grid index of the first hit (or -1 if none by ``max_steps``) and a box-exit flag."""
    x = x0.copy()
    if geo == BALLS:
        return _first_hit_balls(gen, sub, x, max_steps, gp, centers, order, ukeys, starts, box)
    return _first_hit_simple(gen, sub, x, max_steps, geo, gp, box)


@njit(cache=True, nogil=True)
def group_hit_steps(gen, sub, x0, n, kmax, max_steps, geo, gp, centers, order, ukeys, starts):
    """Run ``n`` searchers in lockstep; grid indices of the first ``kmax`` hits (-1 if unreached)."""
    d = x0.shape[0]
    x = np.empty((n, d))
    for i in range(n):
        for j in range(d):
            x[i, j] = x0[j]
    alive = np.ones(n, dtype=np.bool_)
    out = -np.ones(kmax, dtype=np.int64)
    balls = geo == BALLS
    hits = 0
    for step in range(1, max_steps + 1):
        for i in range(n):
            if not alive[i]:
                continue
            sd = math.sqrt(2.0 * increment(gen, sub))
            for j in range(d):
                x[i, j] += sd * gen.standard_normal()
            if balls:
                hit = contains(x[i], geo, gp, centers, order, ukeys, starts)
            else:
                hit = _simple_contains(x[i], geo, gp)
            if hit:
                alive[i] = False
                if hits < kmax:
                    out[hits] = step
                hits += 1
        if hits >= kmax:
            return out
    return out


@njit(cache=True, nogil=True)
def endpoint(gen, sub, x0, nsteps):
    """Position X(nsteps * dt) of a free path started at ``x0``."""
    d = x0.shape[0]
    x = x0.copy()
    for _ in range(nsteps):
        sd = math.sqrt(2.0 * increment(gen, sub))
        for j in range(d):
            x[j] += sd * gen.standard_normal()
    return x
