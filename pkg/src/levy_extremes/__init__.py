"""Subordinate Brownian motion, first hitting times and their extreme statistics."""

from .config import ConfigError, ExperimentConfig, format_config, parse_config
from .extremes import (ExtremeReport, direct_TkN, erlang_cdf, extreme_report, kth_minimum,
                       ks_distance_rescaled, moment_errors, sample_TkN)
from .rates import (Method, QuadratureError, RateResult, getoor_mean_fht, levy_tail,
                    rate_closed_form, rate_poisson_approx, rate_quadrature,
                    rate_upper_bound_halfline)
from .simulate import FhtPool, FhtSample, SimConfig, run_pool, simulate_fht
from .subordinators import (Family, SubordinatorSpec, laplace_exponent, levy_density,
                            sample_increment, sample_stable_unit)
from .targets import (Annulus, HalfLine, PoissonBalls, SphereExterior, TargetSpec, contains,
                      gaussian_mass, generate_poisson_field)

__version__ = "0.1.0"

__all__ = [
    "Annulus", "ConfigError", "ExperimentConfig", "ExtremeReport", "Family", "FhtPool",
    "FhtSample", "HalfLine", "Method", "PoissonBalls", "QuadratureError", "RateResult",
    "SimConfig", "SphereExterior", "SubordinatorSpec", "TargetSpec", "contains", "direct_TkN",
    "erlang_cdf", "extreme_report", "format_config", "gaussian_mass", "generate_poisson_field",
    "getoor_mean_fht", "kth_minimum", "ks_distance_rescaled", "laplace_exponent",
    "levy_density", "levy_tail", "moment_errors", "parse_config", "rate_closed_form",
    "rate_poisson_approx", "rate_quadrature", "rate_upper_bound_halfline", "run_pool",
    "sample_TkN", "sample_increment", "sample_stable_unit", "simulate_fht",
]
