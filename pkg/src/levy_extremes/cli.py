"""Command-line front end.

Usage::

    levy-extremes --config run.cfg [--seed S] [--threads T] [--out PATH] [COMMAND]

Data goes to ``output_path`` (or standard output when unset); diagnostics go
to standard error. Exit status is 0 on success, 1 for configuration errors and
2 for numerical failures.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import extremes as ext
from .config import COMMANDS, ConfigError, ExperimentConfig, parse_config
from .rates import QuadratureError, rate_closed_form, rate_poisson_approx, rate_quadrature
from .simulate import run_pool, write_pool_csv
from .subordinators import Family
from .targets import PoissonBalls, save_centers

log = logging.getLogger("levy_extremes")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2
RATE_AGREEMENT = 1e-6


class NumericalFailure(RuntimeError):
    """A computation finished but its result cannot be trusted."""


def _alphas(cfg: ExperimentConfig):
    if Family(cfg.family) is Family.GAMMA:
        return [None]
    return list(cfg.alpha_list) if cfg.alpha_list else [cfg.alpha]


def _out(cfg: ExperimentConfig):
    return cfg.output_path if cfg.output_path else sys.stdout


# ---- commands ---------------------------------------------------------------

def _cmd_rate(cfg: ExperimentConfig, threads: int) -> None:
    target = cfg.target()
    disagreements = []
    for a in _alphas(cfg):
        spec = cfg.subordinator(a)
        prefix = f"alpha={a!r}\t" if cfg.alpha_list else ""
        closed = rate_closed_form(spec, target)
        quad = rate_quadrature(spec, target)
        if closed is not None:
            print(f"{prefix}closed_form\t{closed.rho!r}")
        print(f"{prefix}quadrature\t{quad.rho!r}")
        if isinstance(target.geometry, PoissonBalls) and spec.family is not Family.GAMMA:
            g = target.geometry
            print(f"{prefix}approximation\t{rate_poisson_approx(spec, g.lam, g.l, g.d)!r}")
        if closed is not None:
            rel = abs(closed.rho - quad.rho) / closed.rho
            if rel > RATE_AGREEMENT:
                log.error("closed form and quadrature disagree: relative difference %.3g", rel)
                disagreements.append(a)
    if disagreements:
        raise NumericalFailure("rate disagreement above tolerance")


def _cmd_fht(cfg: ExperimentConfig, threads: int) -> None:
    pool = run_pool(cfg.sim_config(), threads=threads)
    write_pool_csv(pool, _out(cfg), comment=cfg.comment())


def _reports(cfg: ExperimentConfig, threads: int) -> list[ext.ExtremeReport]:
    target = cfg.target()
    reports = []
    for a in _alphas(cfg):
        rho = cfg.rate(a, target).rho
        sim = cfg.sim_config(a, target, rho)
        log.info("alpha=%s rho=%.8g t_max=%.6g dt=%.3g", a, rho, sim.t_max, sim.dt)
        if cfg.estimator == "resample":
            pool = run_pool(sim, threads=threads)
        for N in cfg.N_list:
            if cfg.estimator == "resample":
                samples = ext.sample_TkN(pool, N, cfg.k, cfg.resamples, cfg.seed)
            else:
                samples = ext.direct_TkN(sim, N, [cfg.k], cfg.resamples, threads)[cfg.k]
            rep = ext.extreme_report(samples, N, cfg.k, rho)
            if rep.censored_fraction > 0.01:
                log.warning("N=%d: %.2f%% of T_{k,N} samples censored", N,
                            100 * rep.censored_fraction)
            log.info("N=%d ks=%.4g", N, rep.ks_distance)
            reports.append(rep)
    return reports


def _cmd_ks_sweep(cfg: ExperimentConfig, threads: int) -> None:
    ext.write_ks_csv(_out(cfg), _reports(cfg, threads), comment=cfg.comment())


def _cmd_moments(cfg: ExperimentConfig, threads: int) -> None:
    ext.write_moments_csv(_out(cfg), _reports(cfg, threads), comment=cfg.comment())


def _cmd_extremes(cfg: ExperimentConfig, threads: int) -> None:
    ext.write_histogram_csv(_out(cfg), _reports(cfg, threads), comment=cfg.comment())


def _cmd_poisson_field(cfg: ExperimentConfig, threads: int) -> None:
    target = cfg.target()
    log.info("generated %d ball centers", len(target.geometry.points))
    save_centers(target, _out(cfg), comment=cfg.comment())


_COMMANDS = {
    "rate": _cmd_rate,
    "fht": _cmd_fht,
    "extremes": _cmd_extremes,
    "ks-sweep": _cmd_ks_sweep,
    "moments": _cmd_moments,
    "poisson-field": _cmd_poisson_field,
}


def run_command(cfg: ExperimentConfig, threads: int = 1) -> int:
    """Execute ``cfg.command``; returns the process exit code."""
    try:
        _COMMANDS[cfg.command](cfg, threads)
    except (QuadratureError, NumericalFailure, ArithmeticError, ValueError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    return EXIT_OK


# ---- entry point --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="levy-extremes",
                                description="First hitting times of subordinate Brownian motion "
                                            "and their extreme statistics.")
    p.add_argument("command", nargs="?", choices=COMMANDS,
                   help="override the command given in the config file")
    p.add_argument("--config", required=True, type=Path, help="key = value configuration file")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    p.add_argument("--out", help="override output_path")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to standard error")
    return p


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    try:
        text = args.config.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    overrides = {}
    if args.command:
        overrides["command"] = args.command
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed must be a 64-bit unsigned integer")
        overrides["seed"] = args.seed
    if args.out:
        overrides["output_path"] = args.out
    cfg = parse_config(text, overrides)
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if cfg.output_path:
        parent = Path(cfg.output_path).parent
        if not parent.is_dir():
            print(f"config error: output directory {parent} does not exist", file=sys.stderr)
            return EXIT_CONFIG
    return run_command(cfg, args.threads)


if __name__ == "__main__":
    sys.exit(main())
