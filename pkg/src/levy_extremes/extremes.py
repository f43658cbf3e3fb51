"""Order statistics of first hitting times and their Erlang limit laws.

``T_{k,N}`` is the k-th smallest of ``N`` independent hitting times. After
rescaling by ``rho * N`` it should be close to an Erlang(1, k) variable, so the
main diagnostics here are a Kolmogorov-Smirnov distance to that law and the
absolute errors of the first two moments.

Two estimators are provided:

* :func:`sample_TkN` draws groups of ``N`` from an existing pool of single
  hitting times (groups sampled without replacement, independently of each
  other). It is cheap but the groups share pool members.
* :func:`direct_TkN` runs ``N`` fresh searchers per group until the k-th one
  hits, so every group is an exact independent realization.

Censored hitting times are represented by ``inf`` throughout.
"""

from __future__ import annotations

import contextlib
import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels, rng
from ._io import open_text_out
from .simulate import FhtPool, SimConfig

HIST_BINS = 50
HIST_ZMAX = 6.0


# ---------------------------------------------------------------- basics

def _as_times(values) -> np.ndarray:
    """Float array with ``inf`` for censored entries (accepts pools and sample lists)."""
    if isinstance(values, FhtPool):
        return values.times
    out = []
    for v in values:
        if v is None:
            out.append(math.inf)
        elif hasattr(v, "value"):
            out.append(v.value)
        else:
            out.append(float(v))
    return np.asarray(out, dtype=float)


def kth_minimum(values, k: int) -> float:
    """k-th smallest entry; censored values (``inf`` or ``None``) sort after all finite ones."""
    arr = _as_times(values)
    if not 1 <= k <= arr.size:
        raise ValueError(f"k={k} outside [1, {arr.size}]")
    return float(np.partition(arr, k - 1)[k - 1])


def erlang_cdf(k: int, lam: float, t):
    """CDF of the sum of ``k`` independent Exponential(``lam``) variables.

    Equal to the regularized lower incomplete gamma function ``P(k, lam t)``.
    For ``lam t <= k`` the tail series ``exp(-x) sum_{j>=k} x^j/j!`` is used to
    avoid cancellation; otherwise ``1 - exp(-x) sum_{j<k} x^j/j!``.
    """
    if k < 1 or int(k) != k:
        raise ValueError("k must be a positive integer")
    if lam <= 0:
        raise ValueError("lam must be positive")
    k = int(k)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("t must be nonnegative")
    x = lam * t_arr
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)

    if k == 1:
        out[:] = -np.expm1(-x)
    else:
        small = x <= k
        xs = x[small]
        if xs.size:
            # exp(-x) x^k/k! * (1 + x/(k+1) + x^2/((k+1)(k+2)) + ...)
            with np.errstate(divide="ignore"):
                lead = np.exp(-xs + k * np.log(xs) - math.lgamma(k + 1))
            term = np.ones_like(xs)
            acc = np.ones_like(xs)
            j = k
            while True:
                j += 1
                term = term * xs / j
                acc += term
                if np.all(term <= 1e-17 * acc):
                    break
            out[small] = lead * acc
        xl = x[~small]
        if xl.size:
            term = np.ones_like(xl)
            acc = np.ones_like(xl)
            for j in range(1, k):
                term = term * xl / j
                acc += term
            out[~small] = 1.0 - np.exp(-xl) * acc
    np.clip(out, 0.0, 1.0, out=out)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------- estimators

def group_order_statistics(pool, N: int, ks: Sequence[int], resamples: int,
                           seed: int = 0) -> dict[int, np.ndarray]:
    """Order statistics of ``resamples`` groups of size ``N`` drawn from ``pool``.

    Group ``g`` is drawn without replacement using the stream
    ``rng.generator(seed, RESAMPLE, g)``, so the groups (and therefore every
    returned order statistic) depend only on ``seed`` and ``g``.

    Returns
    -------
    dict
        ``k -> array`` of length ``resamples`` (``inf`` where censored).
    """
    times = _as_times(pool)
    M = times.size
    ks = sorted({int(k) for k in ks})
    if N < 1:
        raise ValueError("N must be >= 1")
    if M < N:
        raise ValueError(f"pool of {M} samples is smaller than N={N}")
    if not ks or ks[0] < 1 or ks[-1] > N:
        raise ValueError(f"k must lie in [1, N={N}]")
    if resamples < 1:
        raise ValueError("resamples must be >= 1")
    out = {k: np.empty(resamples) for k in ks}
    kidx = [k - 1 for k in ks]
    for g in range(resamples):
        gen = rng.generator(seed, rng.RESAMPLE, g)
        group = times[gen.choice(M, N, replace=False)]
        part = np.partition(group, kidx)
        for k in ks:
            out[k][g] = part[k - 1]
    return out


def sample_TkN(pool, N: int, k: int, resamples: int, seed: int = 0) -> np.ndarray:
    """``resamples`` pool-resampled realizations of ``T_{k,N}`` (``inf`` when censored)."""
    return group_order_statistics(pool, N, [k], resamples, seed)[k]


def _direct_groups(config: SimConfig, N: int, kmax: int, groups: range) -> np.ndarray:
    sub = config.spec.kernel_params(config.dt)
    geo, gp, centers, order, ukeys, starts = config.target.kernel_args()
    x0 = np.array(config.target.x0, dtype=float)
    out = np.empty((len(groups), kmax), dtype=np.int64)
    for n, g in enumerate(groups):
        gen = rng.generator(config.seed, rng.DIRECT_GROUPS, g)
        out[n] = _kernels.group_hit_steps(gen, sub, x0, N, kmax, config.max_steps, geo, gp,
                                          centers, order, ukeys, starts)
    return out


def direct_TkN(config: SimConfig, N: int, ks: Sequence[int], groups: int,
               threads: int = 1) -> dict[int, np.ndarray]:
    """Independent realizations of ``T_{k,N}`` from fresh groups of ``N`` searchers.

    Each group runs its searchers in lockstep on the grid of ``config`` until
    ``max(ks)`` of them have hit (or ``t_max`` is reached). ``config.trials``
    is ignored. Group ``g`` uses ``rng.generator(seed, DIRECT_GROUPS, g)``;
    results do not depend on ``threads``.
    """
    ks = sorted({int(k) for k in ks})
    if not ks or ks[0] < 1 or ks[-1] > N:
        raise ValueError(f"k must lie in [1, N={N}]")
    kmax = ks[-1]
    chunks = [range(a, min(a + 16, groups)) for a in range(0, groups, 16)]
    if threads <= 1:
        parts = [_direct_groups(config, N, kmax, c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda c: _direct_groups(config, N, kmax, c), chunks))
    steps = np.concatenate(parts) if parts else np.empty((0, kmax), dtype=np.int64)
    times = np.where(steps < 0, np.inf, steps * config.dt)
    return {k: times[:, k - 1].copy() for k in ks}


# ---------------------------------------------------------------- diagnostics

def _finite(samples) -> np.ndarray:
    arr = np.asarray(samples, dtype=float).reshape(-1)
    if arr.size == 0:
        raise ValueError("empty sample")
    if not np.all(np.isfinite(arr)):
        raise ValueError("samples must be finite; drop censored values first")
    return arr


def ks_distance_rescaled(samples, k: int, rho: float, N: int) -> float:
    """Sup distance between the ECDF of ``rho N T`` and the Erlang(1, k) CDF.

    The ECDF is right-continuous; the supremum is attained at a jump, so both
    one-sided limits are compared: ``i/n - F(z_i)`` and ``F(z_i) - (i-1)/n``
    for the sorted rescaled samples ``z_i``. Ties are handled correctly since
    the extremes over a run of equal ``z`` occur at its first and last index.
    """
    z = np.sort(_finite(samples)) * (rho * N)
    n = z.size
    F = erlang_cdf(k, 1.0, z)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def moment_errors(samples, k: int, rho: float, N: int) -> tuple[float, float]:
    """Absolute errors of sample mean and standard deviation against Erlang(rho N, k).

    The predictions are ``k / (rho N)`` and ``sqrt(k) / (rho N)``; the sample
    standard deviation uses ``ddof=0``.
    """
    x = _finite(samples)
    scale = rho * N
    return (abs(float(np.mean(x)) - k / scale),
            abs(float(np.std(x)) - math.sqrt(k) / scale))


def rescaled_histogram(samples, rho: float, N: int, bins: int = HIST_BINS,
                       z_max: float = HIST_ZMAX) -> tuple[np.ndarray, np.ndarray]:
    """Bin centres and density estimate of ``rho N T`` on ``[0, z_max]``.

    Densities are normalized by the number of finite samples (not just those
    falling inside the window) so they estimate the true density.
    """
    z = _finite(samples) * (rho * N)
    counts, edges = np.histogram(z, bins=bins, range=(0.0, z_max))
    width = edges[1] - edges[0]
    return 0.5 * (edges[:-1] + edges[1:]), counts / (z.size * width)


@dataclass(frozen=True)
class ExtremeReport:
    """Diagnostics of one ``(N, k)`` sample of extreme hitting times."""

    N: int
    k: int
    rho: float
    samples_TkN: np.ndarray = field(repr=False)
    ks_distance: float
    empirical_moments: dict
    predicted_moments: dict
    abs_errors: tuple[float, float]
    censored_fraction: float

    def __post_init__(self):
        if not 0.0 <= self.ks_distance <= 1.0:
            raise ValueError("ks_distance outside [0, 1]")


def predicted_moment(k: int, rho: float, N: int, m: int) -> float:
    """``E[T^m]`` for ``T ~ Erlang(rho N, k)``: ``Gamma(k+m)/Gamma(k) (rho N)^-m``."""
    return math.exp(math.lgamma(k + m) - math.lgamma(k)) * (rho * N) ** (-m)


def extreme_report(samples, N: int, k: int, rho: float) -> ExtremeReport:
    """Build an :class:`ExtremeReport`; censored samples are excluded and their share recorded."""
    arr = np.sort(np.asarray(samples, dtype=float))
    finite = arr[np.isfinite(arr)]
    if finite.size == 0:
        raise ValueError("every sample is censored")
    return ExtremeReport(
        N=N, k=k, rho=rho, samples_TkN=arr,
        ks_distance=ks_distance_rescaled(finite, k, rho, N),
        empirical_moments={1: float(np.mean(finite)), 2: float(np.mean(finite ** 2))},
        predicted_moments={m: predicted_moment(k, rho, N, m) for m in (1, 2)},
        abs_errors=moment_errors(finite, k, rho, N),
        censored_fraction=1.0 - finite.size / arr.size,
    )


# ---------------------------------------------------------------- CSV

@contextlib.contextmanager
def _csv_out(path, comment: str | None):
    with open_text_out(path) as fh:
        if comment:
            fh.write(f"# {comment}\n")
        yield csv.writer(fh, lineterminator="\n")


def write_ks_csv(path, reports: Sequence[ExtremeReport], comment: str | None = None) -> None:
    with _csv_out(path, comment) as w:
        w.writerow(["N", "k", "rho", "ks"])
        for r in reports:
            w.writerow([r.N, r.k, repr(r.rho), repr(r.ks_distance)])


def write_moments_csv(path, reports: Sequence[ExtremeReport], comment: str | None = None) -> None:
    with _csv_out(path, comment) as w:
        w.writerow(["N", "abs_err_mean", "abs_err_std"])
        for r in reports:
            w.writerow([r.N, repr(r.abs_errors[0]), repr(r.abs_errors[1])])


def write_histogram_csv(path, reports: Sequence[ExtremeReport], comment: str | None = None) -> None:
    with _csv_out(path, comment) as w:
        w.writerow(["N", "z", "density"])
        for r in reports:
            finite = r.samples_TkN[np.isfinite(r.samples_TkN)]
            z, dens = rescaled_histogram(finite, r.rho, r.N)
            for zi, di in zip(z, dens):
                w.writerow([r.N, repr(float(zi)), repr(float(di))])
