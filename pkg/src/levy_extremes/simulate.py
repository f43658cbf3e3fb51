"""Grid simulation of subordinate Brownian motion and first hitting times.

On the grid ``t_k = k dt`` the subordinator increment ``dS_k`` is drawn exactly
and the Brownian step is ``sqrt(2 dS_k) xi_k`` with ``xi_k`` standard normal in
``R^d``. A hit is recorded at the first grid time whose position lies in the
target; excursions between grid times are not detected.

Trial ``i`` always draws from the stream ``rng.generator(seed, TRIALS, i)``, so
pools are bitwise identical for any thread count.
"""

from __future__ import annotations

import csv
import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels, rng
from ._io import open_text_out
from .subordinators import SubordinatorSpec
from .targets import PoissonBalls, TargetSpec

log = logging.getLogger(__name__)

DEFAULT_DT = 1e-5
DEFAULT_TRIALS = 100_000
CENSORED_WARN_FRACTION = 0.5
_CHUNK = 256


@dataclass(frozen=True)
class SimConfig:
    spec: SubordinatorSpec
    target: TargetSpec
    dt: float = DEFAULT_DT
    t_max: float = 1.0
    trials: int = DEFAULT_TRIALS
    seed: int = 0

    def __post_init__(self):
        if not (self.dt > 0 and self.t_max > 0):
            raise ValueError("dt and t_max must be positive")
        if self.dt > self.t_max:
            raise ValueError(f"dt={self.dt} exceeds t_max={self.t_max}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def max_steps(self) -> int:
        # tolerate t_max / dt landing a hair below an integer
        return int(math.floor(self.t_max / self.dt + 1e-9))


@dataclass(frozen=True)
class FhtSample:
    """One first hitting time; ``grid_steps is None`` means censored at ``t_max``."""

    grid_steps: int | None
    dt: float

    @property
    def censored(self) -> bool:
        return self.grid_steps is None

    @property
    def value(self) -> float:
        return math.inf if self.grid_steps is None else self.grid_steps * self.dt


class FhtPool(Sequence):
    """Hitting times of ``len(pool)`` trials, stored as grid step counts (-1 = censored)."""

    def __init__(self, steps: np.ndarray, dt: float, exited_box: int = 0):
        self.steps = np.asarray(steps, dtype=np.int64)
        self.dt = dt
        self.exited_box = exited_box

    def __len__(self):
        return len(self.steps)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return FhtPool(self.steps[i], self.dt)
        k = int(self.steps[i])
        return FhtSample(None if k < 0 else k, self.dt)

    @property
    def times(self) -> np.ndarray:
        """Hitting times with ``inf`` for censored trials."""
        return np.where(self.steps < 0, np.inf, self.steps * self.dt)

    @property
    def censored_fraction(self) -> float:
        return float(np.mean(self.steps < 0))

    def to_csv(self, path, comment: str | None = None) -> None:
        write_pool_csv(self, path, comment)


def _target_box(target: TargetSpec) -> float:
    g = target.geometry
    return g.box_halfwidth if isinstance(g, PoissonBalls) else 0.0


def _run_trials(config: SimConfig, indices: range) -> tuple[np.ndarray, int]:
    sub = config.spec.kernel_params(config.dt)
    geo, gp, centers, order, ukeys, starts = config.target.kernel_args()
    x0 = np.array(config.target.x0, dtype=float)
    box = _target_box(config.target)
    out = np.empty(len(indices), dtype=np.int64)
    exited = 0
    for n, i in enumerate(indices):
        gen = rng.generator(config.seed, rng.TRIALS, i)
        out[n], ex = _kernels.first_hit(gen, sub, x0, config.max_steps, geo, gp, centers,
                                        order, ukeys, starts, box)
        exited += ex
    return out, exited


def simulate_fht(config: SimConfig, trial_index: int) -> FhtSample:
    """First hitting time of trial ``trial_index`` (a pure function of config and index)."""
    if not 0 <= trial_index < config.trials:
        raise IndexError(f"trial_index {trial_index} outside [0, {config.trials})")
    steps, _ = _run_trials(config, range(trial_index, trial_index + 1))
    k = int(steps[0])
    return FhtSample(None if k < 0 else k, config.dt)


def _chunks(n: int, size: int) -> list[range]:
    return [range(a, min(a + size, n)) for a in range(0, n, size)]


def run_pool(config: SimConfig, threads: int = 1) -> FhtPool:
    """Simulate all trials; the result does not depend on ``threads``."""
    chunks = _chunks(config.trials, _CHUNK)
    if threads <= 1:
        parts = [_run_trials(config, c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda c: _run_trials(config, c), chunks))
    steps = np.concatenate([p[0] for p in parts])
    exited = sum(p[1] for p in parts)
    pool = FhtPool(steps, config.dt, exited)
    cf = pool.censored_fraction
    log.info("pool of %d trials: censored fraction %.4g", len(pool), cf)
    if cf > CENSORED_WARN_FRACTION:
        log.warning("censored fraction %.3g exceeds %.2g; extreme statistics are unreliable",
                    cf, CENSORED_WARN_FRACTION)
    if exited:
        log.warning("%d trial(s) left the target generation box; enlarge box_halfwidth", exited)
    return pool


def sample_positions(spec: SubordinatorSpec, x0, t: float, dt: float, n: int,
                     seed: int = 0) -> np.ndarray:
    """``n`` independent free-path positions ``X(t)`` (no target), one stream per path."""
    nsteps = int(round(t / dt))
    if nsteps < 1 or abs(nsteps * dt - t) > 1e-9 * t:
        raise ValueError("t must be a positive multiple of dt")
    sub = spec.kernel_params(dt)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    out = np.empty((n, x0.shape[0]))
    for i in range(n):
        out[i] = _kernels.endpoint(rng.generator(seed, rng.MISC, i), sub, x0, nsteps)
    return out


def subordinator_values(spec: SubordinatorSpec, t: float, dt: float, n: int,
                        seed: int = 0) -> np.ndarray:
    """``n`` independent values of ``S(t)`` built from ``t/dt`` compiled-sampler increments."""
    nsteps = int(round(t / dt))
    sub = spec.kernel_params(dt)
    return np.array([_kernels.subordinator_sum(rng.generator(seed, rng.MISC, i), sub, nsteps)
                     for i in range(n)])


def write_pool_csv(pool: FhtPool, path, comment: str | None = None) -> None:
    """Write ``trial,fht,censored`` rows to a path or text stream."""
    with open_text_out(path) as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "fht", "censored"])
        for i, k in enumerate(pool.steps):
            k = int(k)
            if k < 0:
                w.writerow([i, "inf", 1])
            else:
                w.writerow([i, repr(k * pool.dt), 0])
