"""Flat ``key = value`` experiment configuration.

One assignment per line, ``#`` starts a comment. Every error names the key and
the line it came from. :func:`format_config` writes a canonical document that
:func:`parse_config` reads back into an equal :class:`ExperimentConfig`.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Any, Callable

from . import rng
from .rates import RateResult, rate_closed_form, rate_quadrature
from .simulate import DEFAULT_DT, DEFAULT_TRIALS, SimConfig
from .subordinators import Family, SubordinatorSpec
from .targets import (Annulus, HalfLine, SphereExterior, TargetSpec, generate_poisson_field,
                      unit_ball_volume)

COMMANDS = ("rate", "fht", "extremes", "ks-sweep", "moments", "poisson-field")
GEOMETRIES = ("halfline", "sphere_exterior", "annulus", "poisson_balls")
ESTIMATORS = ("resample", "direct")
REQUIRED = ("family", "geometry")
DEFAULT_RATE_HORIZON = 1000.0  # default t_max is this many multiples of 1/rho


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key and line."""


@dataclass(frozen=True)
class ExperimentConfig:
    command: str = "rate"
    # subordinator
    family: str | None = None
    alpha: float | None = None
    K: float | None = None
    mu: float | None = None
    C: float | None = None
    b: float = 0.0
    # target
    geometry: str | None = None
    L: float | None = None
    L_minus: float | None = None
    L_plus: float | None = None
    d: int | None = None
    lam: float | None = None
    l: float | None = None
    box_halfwidth: float | None = None
    # simulation
    dt: float = DEFAULT_DT
    t_max: float | None = None
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    # extremes
    N_list: tuple[int, ...] = (10, 100, 1000, 10000)
    k: int = 1
    resamples: int = 10_000
    estimator: str = "resample"
    alpha_list: tuple[float, ...] | None = None
    output_path: str | None = None

    # ---- builders -------------------------------------------------------

    def subordinator(self, alpha: float | None = None) -> SubordinatorSpec:
        a = self.alpha if alpha is None else alpha
        fam = Family(self.family)
        if fam is Family.STABLE:
            return SubordinatorSpec.stable(a, self.K, self.b)
        if fam is Family.TEMPERED_STABLE:
            return SubordinatorSpec.tempered_stable(a, self.mu, self.K, self.b)
        return SubordinatorSpec.gamma(self.C, self.mu, self.b)

    def target(self) -> TargetSpec:
        g = self.geometry
        if g == "halfline":
            return TargetSpec(HalfLine(self.L))
        if g == "sphere_exterior":
            return TargetSpec(SphereExterior(self.L, self.d))
        if g == "annulus":
            return TargetSpec(Annulus(self.L_minus, self.L_plus, self.d))
        return generate_poisson_field(self.lam, self.l, self.d, self.box_halfwidth,
                                      rng=rng.generator(self.seed, rng.POISSON_FIELD))

    def rate(self, alpha: float | None = None, target: TargetSpec | None = None) -> RateResult:
        """Closed-form rate when available, otherwise quadrature."""
        spec = self.subordinator(alpha)
        target = self.target() if target is None else target
        return rate_closed_form(spec, target) or rate_quadrature(spec, target)

    def sim_config(self, alpha: float | None = None, target: TargetSpec | None = None,
                   rho: float | None = None) -> SimConfig:
        target = self.target() if target is None else target
        t_max = self.t_max
        if t_max is None:
            rho = self.rate(alpha, target).rho if rho is None else rho
            t_max = DEFAULT_RATE_HORIZON / rho
        return SimConfig(self.subordinator(alpha), target, dt=self.dt, t_max=t_max,
                         trials=self.trials, seed=self.seed)

    def comment(self) -> str:
        """Single-line record of every setting, used as the first line of CSV outputs.

        ``output_path`` is omitted: it does not affect results, and leaving it
        out keeps reruns into different files byte-identical.
        """
        return "; ".join(f"{k} = {v}" for k, v in _items(self) if k != "output_path")


# ---- key table -------------------------------------------------------------

def _pos(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _to_int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        v = float(text)
        if not v.is_integer():
            raise
        return int(v)


def _int_list(text: str) -> tuple[int, ...]:
    vals = tuple(_to_int(t) for t in text.replace(",", " ").split())
    if not vals:
        raise ValueError("empty list")
    return vals


def _float_list(text: str) -> tuple[float, ...]:
    vals = tuple(float(t) for t in text.replace(",", " ").split())
    if not vals:
        raise ValueError("empty list")
    return vals


def _choice(options):
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    return parse


def _family(text: str) -> str:
    return Family(text).value


@dataclass(frozen=True)
class _Key:
    attr: str
    parse: Callable[[str], Any]
    check: Callable[[Any], bool] | None = None
    rule: str = ""


_KEYS: dict[str, _Key] = {
    "command": _Key("command", _choice(COMMANDS)),
    "family": _Key("family", _family),
    "alpha": _Key("alpha", float, lambda a: 0 < a < 2, "must lie in (0, 2)"),
    "K": _Key("K", float, _pos, "must be > 0"),
    "mu": _Key("mu", float, _nonneg, "must be >= 0"),
    "C": _Key("C", float, _pos, "must be > 0"),
    "b": _Key("b", float, _nonneg, "must be >= 0"),
    "geometry": _Key("geometry", _choice(GEOMETRIES)),
    "L": _Key("L", float, _pos, "must be > 0"),
    "L_minus": _Key("L_minus", float, _pos, "must be > 0"),
    "L_plus": _Key("L_plus", float, _pos, "must be > 0"),
    "d": _Key("d", _to_int, lambda d: d >= 1, "must be >= 1"),
    "lambda": _Key("lam", float, _nonneg, "must be >= 0"),
    "l": _Key("l", float, _pos, "must be > 0"),
    "box_halfwidth": _Key("box_halfwidth", float, _pos, "must be > 0"),
    "dt": _Key("dt", float, _pos, "must be > 0"),
    "t_max": _Key("t_max", float, _pos, "must be > 0"),
    "trials": _Key("trials", _to_int, lambda n: n >= 1, "must be >= 1"),
    "seed": _Key("seed", _to_int, lambda s: 0 <= s < 2 ** 64, "must be a 64-bit unsigned integer"),
    "N_list": _Key("N_list", _int_list, lambda v: min(v) >= 1, "entries must be >= 1"),
    "k": _Key("k", _to_int, lambda k: k >= 1, "must be >= 1"),
    "resamples": _Key("resamples", _to_int, lambda n: n >= 1, "must be >= 1"),
    "estimator": _Key("estimator", _choice(ESTIMATORS)),
    "alpha_list": _Key("alpha_list", _float_list, lambda v: all(0 < a < 2 for a in v),
                       "entries must lie in (0, 2)"),
    "output_path": _Key("output_path", str),
}
_ATTR_TO_KEY = {spec.attr: key for key, spec in _KEYS.items()}


def _items(cfg: ExperimentConfig):
    """``(key, text)`` pairs in canonical order, skipping unset optional fields."""
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if v is None:
            continue
        if isinstance(v, tuple):
            text = ", ".join(repr(x) for x in v)
        elif isinstance(v, float):
            text = repr(v)
        else:
            text = str(v)
        yield _ATTR_TO_KEY[f.name], text


def format_config(cfg: ExperimentConfig) -> str:
    """Canonical document for ``cfg``; ``parse_config(format_config(c)) == c``."""
    return "".join(f"{k} = {v}\n" for k, v in _items(cfg))


# ---- parsing -----------------------------------------------------------------

def _err(key: str, lines: dict[str, int], msg: str) -> ConfigError:
    where = f"line {lines[key]}: " if key in lines else ""
    return ConfigError(f"{where}{key}: {msg}")


def parse_config(text: str, overrides: dict[str, Any] | None = None) -> ExperimentConfig:
    """Parse and validate a configuration document.

    ``overrides`` maps field names to values that replace those in ``text``
    before cross-field validation (used for command-line flags).
    """
    values: dict[str, Any] = {}
    lines: dict[str, int] = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected 'key = value', got {raw.strip()!r}")
        key, _, val = (p.strip() for p in line.partition("="))
        if key not in _KEYS:
            raise ConfigError(f"line {n}: unknown key {key!r}")
        if key in lines:
            raise ConfigError(f"line {n}: {key}: duplicate (first set on line {lines[key]})")
        spec = _KEYS[key]
        try:
            parsed = spec.parse(val)
        except ValueError as exc:
            raise ConfigError(f"line {n}: {key}: cannot parse {val!r} ({exc})") from None
        if spec.check is not None and not spec.check(parsed):
            raise ConfigError(f"line {n}: {key} = {val} {spec.rule}")
        values[spec.attr] = parsed
        lines[key] = n
    missing = [k for k in REQUIRED if _KEYS[k].attr not in values]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    for attr in overrides or {}:
        lines.pop(_ATTR_TO_KEY[attr], None)
    cfg = ExperimentConfig(**(values | dict(overrides or {})))
    validate(cfg, lines)
    return cfg


def _need(cfg, lines, ctx_key: str, *attrs: str) -> None:
    for a in attrs:
        if getattr(cfg, a) is None:
            value = getattr(cfg, _KEYS[ctx_key].attr)
            raise _err(ctx_key, lines, f"{value} requires key {_ATTR_TO_KEY[a]!r}")


def validate(cfg: ExperimentConfig, lines: dict[str, int] | None = None) -> None:
    """Cross-field checks; raises :class:`ConfigError` naming the responsible key."""
    lines = lines or {}
    fam = Family(cfg.family)
    if fam in (Family.STABLE, Family.TEMPERED_STABLE):
        if cfg.alpha is None and cfg.alpha_list is None:
            raise _err("family", lines, f"{fam.value} requires key 'alpha'")
        _need(cfg, lines, "family", "K")
    if fam is Family.TEMPERED_STABLE:
        _need(cfg, lines, "family", "mu")
    if fam is Family.GAMMA:
        _need(cfg, lines, "family", "C", "mu")
        if cfg.mu <= 0:
            raise _err("mu", lines, "must be > 0 for the gamma family")
        if cfg.alpha_list is not None:
            raise _err("alpha_list", lines, "not used by the gamma family")

    geo = cfg.geometry
    if geo == "halfline":
        _need(cfg, lines, "geometry", "L")
        if cfg.d not in (None, 1):
            raise _err("d", lines, "halfline is one-dimensional")
    elif geo == "sphere_exterior":
        _need(cfg, lines, "geometry", "L", "d")
    elif geo == "annulus":
        _need(cfg, lines, "geometry", "L_minus", "L_plus", "d")
        if cfg.L_minus >= cfg.L_plus:
            raise _err("L_plus", lines, "must exceed L_minus")
    else:
        _need(cfg, lines, "geometry", "lam", "l", "d", "box_halfwidth")

    if cfg.t_max is not None and cfg.dt > cfg.t_max:
        raise _err("dt", lines, f"dt = {cfg.dt} exceeds t_max = {cfg.t_max}")
    if cfg.k > min(cfg.N_list):
        raise _err("k", lines, f"k = {cfg.k} exceeds the smallest N in N_list")
    if cfg.estimator == "resample" and cfg.command in ("extremes", "ks-sweep", "moments"):
        if max(cfg.N_list) > cfg.trials:
            raise _err("N_list", lines, f"largest N exceeds the pool size trials = {cfg.trials}")
    if cfg.command == "poisson-field" and geo != "poisson_balls":
        raise _err("command", lines, "poisson-field needs geometry = poisson_balls")

    # Build the model objects so their own constraints are enforced now.
    try:
        for a in cfg.alpha_list or (cfg.alpha,):
            cfg.subordinator(a)
    except ValueError as exc:
        raise _err("family", lines, str(exc)) from None
    try:
        if geo != "poisson_balls":
            cfg.target()
        else:
            if cfg.lam * cfg.l ** cfg.d * unit_ball_volume(cfg.d) >= 1:
                raise ValueError("targets are not sparse: lambda * l^d * V_d must be < 1")
            if math.ceil(2 * cfg.box_halfwidth / cfg.l) ** cfg.d > 2 ** 62:
                raise ValueError("box_halfwidth / l too large for the cell index")
    except ValueError as exc:
        raise _err("geometry", lines, str(exc)) from None
