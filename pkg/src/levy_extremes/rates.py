"""Short-time hitting rate rho = b F'(0) + int_0^inf F(s) nu(ds).

``F(s)`` is the Gaussian mass of the target (see :mod:`levy_extremes.targets`).
Every supported target is separated from the start, so ``F'(0) = 0`` and the
drift never contributes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from scipy import integrate

from .special import erfc, exp1, gamma as gamma_fn, upper_gamma
from .subordinators import Family, SubordinatorSpec, levy_density
from .targets import (Annulus, HalfLine, PoissonBalls, SphereExterior, TargetSpec,
                      ball_sum_mass, gaussian_mass, unit_ball_volume)

# F(s) < exp(-LOG_CUTOFF) below s = delta^2 / (4 LOG_CUTOFF)
LOG_CUTOFF = 200.0
CHUNK = 4.0
MAX_CHUNKS = 2000
REL_TOL = 1e-11


class Method(str, Enum):
    CLOSED_FORM = "closed_form"
    QUADRATURE = "quadrature"
    APPROXIMATION = "approximation"


@dataclass(frozen=True)
class RateResult:
    rho: float
    method: Method
    abs_error_estimate: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.rho) and self.rho > 0):
            raise ArithmeticError(f"rate must be finite and positive, got {self.rho}")


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested accuracy."""

    def __init__(self, message: str, partial_sums: list[float]):
        super().__init__(f"{message}; partial sums: {partial_sums}")
        self.partial_sums = partial_sums


def levy_tail(spec: SubordinatorSpec, s: float) -> float:
    """Tail mass ``nu((s, inf))`` of the Levy measure."""
    if spec.family is Family.GAMMA:
        return spec.C * exp1(spec.mu * s)
    g = spec.index
    if spec.family is Family.TEMPERED_STABLE and spec.mu > 0:
        return spec.K * g / gamma_fn(1 - g) * spec.mu ** g * upper_gamma(-g, spec.mu * s)
    return spec.K * s ** (-g) / gamma_fn(1 - g)


def levy_integral(spec: SubordinatorSpec, mass: Callable[[float], float],
                  delta: float) -> tuple[float, float]:
    """``int_0^inf mass(s) nu(ds)`` for a mass function vanishing like exp(-delta^2/4s).

    Integrates in ``u = log s`` on ``[log s_lo, 0]`` and then on successive
    chunks of ``[0, inf)`` until the Levy tail beyond the current point is
    negligible. Returns ``(value, error estimate)``.
    """
    if not delta > 0:
        raise ValueError("the start must be a positive distance from the target")

    def integrand(u):
        s = math.exp(u)
        f = mass(s)
        return f * levy_density(spec, s) * s if f > 0 else 0.0

    u_lo = math.log(delta * delta / (4 * LOG_CUTOFF))
    u_split = max(0.0, u_lo)
    partial: list[float] = []
    total = err = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            if u_lo < u_split:
                val, e = integrate.quad(integrand, u_lo, u_split, epsabs=0.0,
                                        epsrel=REL_TOL, limit=200)
                total, err = val, e
                partial.append(total)
            a = u_split
            for _ in range(MAX_CHUNKS):
                val, e = integrate.quad(integrand, a, a + CHUNK, epsabs=0.1 * REL_TOL * total,
                                        epsrel=REL_TOL, limit=200)
                total += val
                err += e
                a += CHUNK
                partial.append(total)
                tail = levy_tail(spec, math.exp(a))
                if total > 0 and tail < REL_TOL * total:
                    return total, err + tail
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"quadrature failed: {exc}", partial) from None
    raise QuadratureError("Levy tail did not become negligible", partial)


def _mass_function(target: TargetSpec) -> Callable[[float], float]:
    if isinstance(target.geometry, PoissonBalls):
        return lambda s: ball_sum_mass(target, s)
    return lambda s: gaussian_mass(target, s)


def rate_quadrature(spec: SubordinatorSpec, target: TargetSpec) -> RateResult:
    """rho by quadrature of the Gaussian mass against the Levy measure.

    For Poisson ball fields the mass is the sum of single-ball masses, which is
    exact only while the balls are disjoint.
    """
    value, err = levy_integral(spec, _mass_function(target), target.distance())
    if err > 1e-8 * value:
        raise QuadratureError(f"error estimate {err:.3g} too large for rho={value:.6g}", [value])
    return RateResult(value, Method.QUADRATURE, err)


def stable_sphere_rate(alpha: float, K: float, L: float, d: int) -> float:
    """rho(L) for a stable subordinator and the exterior of the radius-L ball."""
    return (2 ** alpha * gamma_fn((d + alpha) / 2)
            / (gamma_fn(d / 2) * gamma_fn(1 - alpha / 2)) * K / L ** alpha)


def rate_closed_form(spec: SubordinatorSpec, target: TargetSpec) -> RateResult | None:
    """Exact rho for the tabulated (subordinator, target) pairs, else ``None``.

    Supported: stable with a half-line, ball exterior or annulus; gamma with a
    ball exterior in three dimensions. Ball-based targets must be centered at
    the start. Annulus rates are ``rho(L_minus) - rho(L_plus)`` because
    ``rho(L)`` decreases in ``L``.
    """
    g = target.geometry
    if spec.family is Family.STABLE:
        a, K = spec.alpha, spec.K
        if isinstance(g, HalfLine):
            delta = target.distance()
            rho = gamma_fn(a) * math.sin(a * math.pi / 2) / math.pi * K / delta ** a
            return RateResult(rho, Method.CLOSED_FORM)
        if not target.centered:
            return None
        if isinstance(g, SphereExterior):
            return RateResult(stable_sphere_rate(a, K, g.L, g.d), Method.CLOSED_FORM)
        if isinstance(g, Annulus):
            rho = stable_sphere_rate(a, K, g.L_minus, g.d) - stable_sphere_rate(a, K, g.L_plus, g.d)
            return RateResult(rho, Method.CLOSED_FORM)
    if (spec.family is Family.GAMMA and isinstance(g, SphereExterior) and g.d == 3
            and target.centered):
        z = g.L * math.sqrt(spec.mu)
        return RateResult(2 * spec.C * (math.exp(-z) + exp1(z)), Method.CLOSED_FORM)
    return None


def rate_upper_bound_halfline(spec: SubordinatorSpec, L: float) -> RateResult:
    """Rate of the subordinate-stopped process for ``U = (-inf, -L]`` started at 0.

    Uses ``P(sigma <= s) = erfc(L / (2 sqrt(s)))`` for the Brownian hitting
    time ``sigma``; this is twice the half-line Gaussian mass.
    """
    if L <= 0:
        raise ValueError(f"L must be > 0, got {L}")
    value, err = levy_integral(spec, lambda s: erfc(L / (2 * math.sqrt(s))), L)
    return RateResult(value, Method.QUADRATURE, err)


def rate_poisson_approx(spec: SubordinatorSpec, lam: float, l: float, d: int) -> float:
    """Step-function approximation of rho for sparse Poisson ball targets.

    The Gaussian mass is replaced by 0 before ``s = (lam V_d)^(-2/d)`` and by the
    volume fraction after it.
    """
    if spec.family is Family.GAMMA:
        raise ValueError("the Poisson-target approximation needs a (tempered) stable subordinator")
    if lam < 0 or l <= 0 or d < 1:
        raise ValueError("need lam >= 0, l > 0, d >= 1")
    if lam == 0:
        return 0.0
    a, K = spec.alpha, spec.K
    vd = unit_ball_volume(d)
    if spec.family is Family.TEMPERED_STABLE and spec.mu > 0:
        z = (vd * lam) ** (-2 / d) * spec.mu
        return (K * l ** d * vd * a * lam * spec.mu ** (a / 2) * upper_gamma(-a / 2, z)
                / (2 * gamma_fn(1 - a / 2)))
    return vd ** (1 + a / d) / gamma_fn(1 - a / 2) * K * l ** d * lam ** (1 + a / d)


def getoor_mean_fht(alpha: float, K: float, L: float, d: int) -> float:
    """Mean exit time of a Levy flight from the ball of radius L centered at its start."""
    if not 0 < alpha < 2:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    rho = stable_sphere_rate(alpha, K, L, d)
    return 1.0 / (rho * gamma_fn(1 - alpha / 2) * gamma_fn(1 + alpha / 2))
