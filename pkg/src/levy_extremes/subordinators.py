"""Subordinator families: stable, tempered stable and gamma.

A subordinator is fixed by its drift ``b`` and Levy measure, or equivalently by
its Laplace exponent ``Phi`` with ``E[exp(-beta S(t))] = exp(-t Phi(beta))``.

Convention for the stable families: the generalized diffusion coefficient ``K``
lives in the subordinator, ``Phi(beta) = K beta^(alpha/2)``, so an increment over
``dt`` is ``(K dt)^(2/alpha) Theta`` and the Brownian step needs no ``K``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate

from . import _kernels
from .rng import as_generator


class Family(str, Enum):
    STABLE = "stable"
    TEMPERED_STABLE = "tempered_stable"
    GAMMA = "gamma"


_KERNEL_CODE = {
    Family.STABLE: _kernels.STABLE,
    Family.TEMPERED_STABLE: _kernels.TEMPERED,
    Family.GAMMA: _kernels.GAMMA,
}


@dataclass(frozen=True)
class SubordinatorSpec:
    """Parametric subordinator.

    Parameters
    ----------
    family : Family
    alpha : float
        Stability index in (0, 2); stable and tempered stable only.
    K : float
        Generalized diffusion coefficient; stable and tempered stable only.
    mu : float
        Tempering rate (tempered stable, ``mu >= 0``) or gamma rate (``mu > 0``).
    C : float
        Gamma subordinator intensity.
    b : float
        Drift.
    """

    family: Family
    alpha: float | None = None
    K: float | None = None
    mu: float | None = None
    C: float | None = None
    b: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.b < 0:
            raise ValueError(f"drift b must be >= 0, got {self.b}")
        if self.family in (Family.STABLE, Family.TEMPERED_STABLE):
            if self.alpha is None or not 0.0 < self.alpha < 2.0:
                raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")
            if self.K is None or self.K <= 0:
                raise ValueError(f"K must be > 0, got {self.K}")
        if self.family is Family.TEMPERED_STABLE and (self.mu is None or self.mu < 0):
            raise ValueError(f"tempering rate mu must be >= 0, got {self.mu}")
        if self.family is Family.GAMMA:
            if self.C is None or self.C <= 0:
                raise ValueError(f"C must be > 0, got {self.C}")
            if self.mu is None or self.mu <= 0:
                raise ValueError(f"mu must be > 0, got {self.mu}")
        small, large = levy_measure_moments(self)
        if not (math.isfinite(small) and math.isfinite(large)):
            raise ValueError("Levy measure fails int min(1, s) nu(ds) < inf")

    @classmethod
    def stable(cls, alpha: float, K: float = 1.0, b: float = 0.0) -> SubordinatorSpec:
        return cls(Family.STABLE, alpha=alpha, K=K, b=b)

    @classmethod
    def tempered_stable(cls, alpha: float, mu: float, K: float = 1.0,
                        b: float = 0.0) -> SubordinatorSpec:
        return cls(Family.TEMPERED_STABLE, alpha=alpha, K=K, mu=mu, b=b)

    @classmethod
    def gamma(cls, C: float, mu: float, b: float = 0.0) -> SubordinatorSpec:
        return cls(Family.GAMMA, C=C, mu=mu, b=b)

    @property
    def index(self) -> float:
        """Stability index of the subordinator, ``alpha / 2``."""
        return 0.5 * self.alpha

    def kernel_params(self, dt: float) -> np.ndarray:
        if self.family is Family.GAMMA:
            return _kernels.pack(_kernels.GAMMA, 0.0, 0.0, self.mu, self.C * dt,
                                 1.0 / self.mu, self.b * dt)
        g = self.index
        return _kernels.pack(_KERNEL_CODE[self.family], g, (self.K * dt) ** (1.0 / g),
                             self.mu or 0.0, 0.0, 0.0, self.b * dt)


def laplace_exponent(spec: SubordinatorSpec, beta):
    """Laplace exponent Phi(beta) for ``beta >= 0``."""
    beta = np.asarray(beta, dtype=float)
    if np.any(beta < 0):
        raise ValueError("beta must be >= 0")
    if spec.family is Family.STABLE:
        out = spec.K * beta ** spec.index
    elif spec.family is Family.TEMPERED_STABLE:
        g = spec.index
        out = spec.K * ((beta + spec.mu) ** g - spec.mu ** g)
    else:
        out = spec.C * np.log1p(beta / spec.mu)
    out = out + spec.b * beta
    return float(out) if out.ndim == 0 else out


def levy_density(spec: SubordinatorSpec, s):
    """Density of the Levy measure, ``nu(ds)/ds``, for ``s > 0``."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValueError("Levy density is defined for s > 0 only")
    if spec.family is Family.GAMMA:
        out = spec.C * np.exp(-spec.mu * s) / s
    else:
        g = spec.index
        out = spec.K * g / math.gamma(1.0 - g) * s ** (-1.0 - g)
        if spec.family is Family.TEMPERED_STABLE:
            out = out * np.exp(-spec.mu * s)
    return float(out) if out.ndim == 0 else out


def _log_levy_density(spec: SubordinatorSpec, u: float) -> float:
    """``log(nu(ds)/ds)`` at ``s = exp(u)``; ``-inf`` once the tempering underflows."""
    s = math.exp(u) if u < 700.0 else math.inf
    if spec.family is Family.GAMMA:
        return math.log(spec.C) - spec.mu * s - u
    g = spec.index
    out = math.log(spec.K * g / math.gamma(1.0 - g)) - (1.0 + g) * u
    if spec.family is Family.TEMPERED_STABLE and spec.mu > 0:
        out -= spec.mu * s
    return out


def levy_measure_moments(spec: SubordinatorSpec) -> tuple[float, float]:
    """Numerical values of int_0^1 s nu(ds) and int_1^inf nu(ds).

    Both integrals are taken in ``u = log s``, where the integrands decay
    exponentially at both ends.
    """
    small, _ = integrate.quad(lambda u: math.exp(2 * u + _log_levy_density(spec, u)),
                              -np.inf, 0.0)
    large, _ = integrate.quad(lambda u: math.exp(u + _log_levy_density(spec, u)),
                              0.0, np.inf)
    return small, large


def stable_transform(gamma: float, v, e):
    """Chambers-Mallows-Stuck map from ``(V, E)`` to a positive gamma-stable variate."""
    v = np.asarray(v, dtype=float)
    e = np.asarray(e, dtype=float)
    a = gamma * (v + 0.5 * np.pi)
    with np.errstate(divide="ignore"):
        out = np.sin(a) / np.cos(v) ** (1.0 / gamma) * (np.cos(v - a) / e) ** ((1.0 - gamma) / gamma)
    return float(out) if out.ndim == 0 else out


def sample_stable_unit(gamma: float, rng=None, size=None):
    """Draw Theta with ``E[exp(-beta Theta)] = exp(-beta^gamma)``, ``gamma`` in (0, 1).

    Each draw uses two uniforms: ``V = pi (U1 - 1/2)`` and ``E = -log U2``.
    Draws with ``V`` within 1e-12 of +-pi/2 are redrawn.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    rng = as_generator(rng)
    n = 1 if size is None else int(np.prod(size))
    v = np.empty(n)
    u = np.empty(n)
    pending = np.arange(n)
    while pending.size:
        # column order (v, u) per draw matches the compiled sampler's stream use
        draws = rng.random((pending.size, 2))
        v[pending] = np.pi * (draws[:, 0] - 0.5)
        u[pending] = draws[:, 1]
        pending = pending[0.5 * np.pi - np.abs(v[pending]) < _kernels.V_GUARD]
    with np.errstate(divide="ignore"):
        theta = stable_transform(gamma, v, -np.log(u))
    theta = np.where(u == 0.0, 0.0, theta)
    return float(theta[0]) if size is None else theta.reshape(size)


def sample_increment(spec: SubordinatorSpec, dt: float, rng=None, size=None):
    """Exact draw(s) of ``S(t + dt) - S(t)``.

    Tempered stable increments use rejection: a stable increment ``s`` is kept
    with probability ``exp(-mu s)``, which tilts its law to the tempered one.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    rng = as_generator(rng)
    n = 1 if size is None else int(np.prod(size))
    if spec.family is Family.GAMMA:
        out = rng.gamma(spec.C * dt, 1.0 / spec.mu, n)
    else:
        scale = (spec.K * dt) ** (1.0 / spec.index)
        if spec.family is Family.STABLE:
            out = scale * sample_stable_unit(spec.index, rng, n)
        else:
            out = np.empty(n)
            pending = np.arange(n)
            while pending.size:
                s = scale * sample_stable_unit(spec.index, rng, pending.size)
                keep = rng.random(pending.size) < np.exp(-spec.mu * s)
                out[pending[keep]] = s[keep]
                pending = pending[~keep]
    out = out + spec.b * dt
    return float(out[0]) if size is None else out.reshape(size)
