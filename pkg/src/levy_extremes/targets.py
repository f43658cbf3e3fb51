"""Target sets U in R^d, membership, and Gaussian masses F(s) = P(x0 + B(s) in U).

``B`` has variance ``2 s`` per coordinate. All targets are closed sets, and the
starting point must lie strictly outside them.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import _kernels, rng as rng_mod
from ._io import open_text_out
from .special import erfc, gammainc_upper

log = logging.getLogger(__name__)

GAUSSIAN_MASS_POINTS = 10_000


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(1 + d / 2)


@dataclass(frozen=True)
class HalfLine:
    """``U = (-inf, -L]`` on the real line."""

    L: float
    d: int = 1

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError(f"L must be > 0, got {self.L}")
        if self.d != 1:
            raise ValueError("HalfLine is one-dimensional")


@dataclass(frozen=True)
class SphereExterior:
    """``U = {|x| >= L}``; hitting it is escaping the ball of radius L."""

    L: float
    d: int

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError(f"L must be > 0, got {self.L}")
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")


@dataclass(frozen=True)
class Annulus:
    """``U = {L_minus <= |x| <= L_plus}``."""

    L_minus: float
    L_plus: float
    d: int

    def __post_init__(self):
        if not 0 < self.L_minus < self.L_plus:
            raise ValueError(f"need 0 < L_minus < L_plus, got {self.L_minus}, {self.L_plus}")
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")


@dataclass(frozen=True, eq=False)
class PoissonBalls:
    """Union of closed balls of radius ``l`` around a fixed set of centers.

    ``lam`` and ``box_halfwidth`` record how the centers were generated: a
    Poisson field of density ``lam`` restricted to ``[-box_halfwidth, box_halfwidth]^d``.
    Membership uses a uniform grid of cell size ``l`` over the box.
    """

    points: np.ndarray
    l: float
    d: int
    lam: float
    box_halfwidth: float
    _index: tuple = field(init=False, repr=False)

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=float).reshape(-1, self.d))
        if self.l <= 0 or self.box_halfwidth <= 0 or self.lam < 0:
            raise ValueError("PoissonBalls needs l > 0, box_halfwidth > 0, lam >= 0")
        if pts.size and np.any(np.abs(pts) > self.box_halfwidth):
            raise ValueError("all centers must lie inside the generation box")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "_index", _build_index(pts, self.l, self.box_halfwidth))

    def __eq__(self, other):
        if not isinstance(other, PoissonBalls):
            return NotImplemented
        return (self.l, self.d, self.lam, self.box_halfwidth) == (
            other.l, other.d, other.lam, other.box_halfwidth
        ) and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash((self.l, self.d, self.lam, self.box_halfwidth, self.points.tobytes()))

    @property
    def volume_fraction(self) -> float:
        """Fraction of space covered for a dense Poisson field, ``lam l^d V_d``."""
        return self.lam * self.l ** self.d * unit_ball_volume(self.d)


Geometry = HalfLine | SphereExterior | Annulus | PoissonBalls


def _build_index(points: np.ndarray, h: float, box: float):
    ncell = max(1, math.ceil(2 * box / h))
    d = points.shape[1]
    if float(ncell) ** d > 2.0 ** 62:
        raise ValueError("cell grid too large; increase l or shrink the box")
    origin = -box
    cells = np.clip(np.floor((points - origin) / h).astype(np.int64), 0, ncell - 1)
    keys = np.zeros(len(points), dtype=np.int64)
    stride = 1
    for j in range(d):
        keys += cells[:, j] * stride
        stride *= ncell
    order = np.argsort(keys, kind="stable").astype(np.int64)
    ukeys, first = np.unique(keys[order], return_index=True)
    starts = np.append(first, len(points)).astype(np.int64)
    gp = np.array([0.0, origin, h, ncell], dtype=np.float64)
    return order, ukeys.astype(np.int64), starts, gp


_EMPTY_CENTERS = np.zeros((0, 1))
_EMPTY_INT = np.zeros(0, dtype=np.int64)


@dataclass(frozen=True)
class TargetSpec:
    """Target geometry plus starting point ``x0`` (origin by default)."""

    geometry: Geometry
    x0: np.ndarray | None = None

    def __post_init__(self):
        d = self.geometry.d
        x0 = np.zeros(d) if self.x0 is None else np.asarray(self.x0, dtype=float).reshape(-1)
        if x0.shape != (d,):
            raise ValueError(f"x0 must have dimension {d}")
        x0.setflags(write=False)
        object.__setattr__(self, "x0", x0)
        if contains(self, x0):
            raise ValueError("starting point x0 lies in the target")

    def __eq__(self, other):
        if not isinstance(other, TargetSpec):
            return NotImplemented
        return self.geometry == other.geometry and np.array_equal(self.x0, other.x0)

    def __hash__(self):
        return hash((self.geometry, self.x0.tobytes()))

    @property
    def d(self) -> int:
        return self.geometry.d

    @property
    def centered(self) -> bool:
        return not np.any(self.x0)

    def kernel_args(self):
        """``(geometry code, params, centers, order, keys, starts)`` for the compiled loops."""
        g = self.geometry
        if isinstance(g, HalfLine):
            return _kernels.HALFLINE, np.array([g.L]), _EMPTY_CENTERS, _EMPTY_INT, _EMPTY_INT, _EMPTY_INT
        if isinstance(g, SphereExterior):
            return _kernels.SPHERE_EXTERIOR, np.array([g.L]), _EMPTY_CENTERS, _EMPTY_INT, _EMPTY_INT, _EMPTY_INT
        if isinstance(g, Annulus):
            return (_kernels.ANNULUS, np.array([g.L_minus, g.L_plus]), _EMPTY_CENTERS,
                    _EMPTY_INT, _EMPTY_INT, _EMPTY_INT)
        order, ukeys, starts, gp = g._index
        gp = gp.copy()
        gp[0] = g.l
        centers = g.points if len(g.points) else np.zeros((0, g.d))
        return _kernels.BALLS, gp, centers, order, ukeys, starts

    def distance(self) -> float:
        """Euclidean distance from ``x0`` to the target."""
        g = self.geometry
        if isinstance(g, HalfLine):
            return float(self.x0[0] + g.L)
        r = float(np.linalg.norm(self.x0))
        if isinstance(g, SphereExterior):
            return g.L - r
        if isinstance(g, Annulus):
            return g.L_minus - r if r < g.L_minus else r - g.L_plus
        if len(g.points) == 0:
            return math.inf
        return float(np.min(np.linalg.norm(g.points - self.x0, axis=1)) - g.l)


def contains(target: TargetSpec, x) -> bool | np.ndarray:
    """Membership in the closed target set; ``x`` is one point or an ``(n, d)`` array of points."""
    x = np.asarray(x, dtype=float)
    single = x.ndim < 2
    pts = np.ascontiguousarray(x.reshape(1, -1) if single else x)
    if pts.shape[1] != target.d:
        raise ValueError(f"point dimension {pts.shape[1]} does not match target dimension {target.d}")
    geo, gp, centers, order, ukeys, starts = target.kernel_args()
    out = _kernels.contains_many(pts, geo, gp, centers, order, ukeys, starts)
    return bool(out[0]) if single else out


def _sphere_exterior_mass(L: float, d: int, x0: np.ndarray, s: float) -> float:
    r2 = float(x0 @ x0)
    if r2 == 0.0:
        return gammainc_upper(d / 2, L * L / (4 * s))
    return float(stats.ncx2.sf(L * L / (2 * s), d, r2 / (2 * s)))


def gaussian_mass(target: TargetSpec, s: float, rng=None, n_points: int = GAUSSIAN_MASS_POINTS) -> float:
    """F(s) = P(x0 + B(s) in U).

    Closed forms for half-line, ball exterior and annulus; Monte Carlo with
    ``n_points`` Gaussian draws for Poisson ball fields.
    """
    if s <= 0:
        raise ValueError(f"s must be > 0, got {s}")
    g = target.geometry
    if isinstance(g, HalfLine):
        return 0.5 * erfc((target.x0[0] + g.L) / math.sqrt(4 * s))
    if isinstance(g, SphereExterior):
        return _sphere_exterior_mass(g.L, g.d, target.x0, s)
    if isinstance(g, Annulus):
        return (_sphere_exterior_mass(g.L_minus, g.d, target.x0, s)
                - _sphere_exterior_mass(g.L_plus, g.d, target.x0, s))
    gen = rng_mod.as_generator(rng if rng is not None else rng_mod.generator(0, rng_mod.GAUSSIAN_MASS))
    pts = target.x0 + math.sqrt(2 * s) * gen.standard_normal((n_points, g.d))
    return float(np.mean(contains(target, pts)))


def ball_sum_mass(target: TargetSpec, s: float) -> float:
    """Sum over balls of P(x0 + B(s) in ball); equals F(s) when the balls are disjoint."""
    g = target.geometry
    if not isinstance(g, PoissonBalls):
        raise TypeError("ball_sum_mass applies to PoissonBalls targets")
    if len(g.points) == 0:
        return 0.0
    nc = np.sum((g.points - target.x0) ** 2, axis=1) / (2 * s)
    return float(np.sum(stats.ncx2.cdf(g.l * g.l / (2 * s), g.d, nc)))


def generate_poisson_field(lam: float, l: float, d: int, box_halfwidth: float,
                           rng=None, x0=None) -> TargetSpec:
    """One realization of Poisson-distributed ball targets in ``[-W, W]^d``.

    Balls that would contain ``x0`` are deleted so that the start stays
    outside the target.
    """
    if lam < 0 or l <= 0 or d < 1 or box_halfwidth <= 0:
        raise ValueError("need lam >= 0, l > 0, d >= 1, box_halfwidth > 0")
    if lam * l ** d * unit_ball_volume(d) >= 1:
        raise ValueError("targets are not sparse: lam * l^d * V_d must be < 1")
    gen = rng_mod.as_generator(rng if rng is not None else rng_mod.generator(0, rng_mod.POISSON_FIELD))
    x0 = np.zeros(d) if x0 is None else np.asarray(x0, dtype=float)
    count = gen.poisson(lam * (2 * box_halfwidth) ** d)
    pts = gen.uniform(-box_halfwidth, box_halfwidth, (count, d))
    keep = np.linalg.norm(pts - x0, axis=1) > l
    if not np.all(keep):
        log.info("removed %d ball(s) containing the starting point", int(np.sum(~keep)))
    geom = PoissonBalls(pts[keep], l=l, d=d, lam=lam, box_halfwidth=box_halfwidth)
    return TargetSpec(geom, x0)


def save_centers(target: TargetSpec, path, comment: str | None = None) -> None:
    g = target.geometry
    if not isinstance(g, PoissonBalls):
        raise TypeError("only PoissonBalls targets have centers")
    with open_text_out(path) as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{j + 1}" for j in range(g.d)])
        for p in g.points:
            w.writerow([repr(float(v)) for v in p])


def load_centers(path, l: float, lam: float, box_halfwidth: float, x0=None) -> TargetSpec:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    d = len(header)
    pts = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]]).reshape(-1, d)
    return TargetSpec(PoissonBalls(pts, l=l, d=d, lam=lam, box_halfwidth=box_halfwidth), x0)
