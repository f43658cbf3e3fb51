import logging
import math

import numpy as np
import pytest

from levy_extremes import _kernels, rng
from levy_extremes.rates import getoor_mean_fht, rate_closed_form
from levy_extremes.simulate import (
    FhtPool,
    FhtSample,
    SimConfig,
    run_pool,
    sample_positions,
    simulate_fht,
    subordinator_values,
    write_pool_csv,
)
from levy_extremes.subordinators import SubordinatorSpec, laplace_exponent
from levy_extremes.targets import Annulus, HalfLine, SphereExterior, TargetSpec, generate_poisson_field

HALFLINE = TargetSpec(HalfLine(1.0))
SPHERE3 = TargetSpec(SphereExterior(1.0, 3))
ANNULUS3 = TargetSpec(Annulus(1.0, 2.0, 3))


# ---- configuration and sample types ---------------------------------------------------

@pytest.mark.parametrize("kwargs", [dict(dt=0.2, t_max=0.1), dict(trials=0), dict(seed=-1),
                                    dict(seed=2 ** 64), dict(dt=0.0)])
def test_sim_config_validation(kwargs):
    with pytest.raises(ValueError):
        SimConfig(SubordinatorSpec.stable(1.0), HALFLINE, **kwargs)


def test_max_steps_tolerates_rounding():
    assert SimConfig(SubordinatorSpec.stable(1.0), HALFLINE, dt=0.1, t_max=0.3).max_steps == 3


def test_fht_sample_values():
    assert FhtSample(7, 0.01).value == pytest.approx(0.07)
    assert not FhtSample(7, 0.01).censored
    assert FhtSample(None, 0.01).censored and FhtSample(None, 0.01).value == math.inf


def test_trial_index_range():
    cfg = SimConfig(SubordinatorSpec.stable(1.0), HALFLINE, dt=0.01, t_max=0.1, trials=3)
    with pytest.raises(IndexError):
        simulate_fht(cfg, 3)


# ---- hitting rule --------------------------------------------------------------------

def test_first_step_hit_is_reported_as_dt():
    # large K makes first-step hits common; each trial's first step is replayed independently
    spec = SubordinatorSpec.stable(1.5, K=1e4)
    cfg = SimConfig(spec, HALFLINE, dt=1e-3, t_max=0.01, trials=400, seed=5)
    pool = run_pool(cfg)
    sub = spec.kernel_params(cfg.dt)
    first = 0
    for i in range(cfg.trials):
        x1 = _kernels.endpoint(rng.generator(cfg.seed, rng.TRIALS, i), sub, np.zeros(1), 1)
        if x1[0] <= -1.0:
            first += 1
            assert pool[i].value == cfg.dt
        else:
            assert pool[i].grid_steps != 1
    assert 0 < first < cfg.trials


def test_hit_times_are_grid_multiples():
    cfg = SimConfig(SubordinatorSpec.stable(1.0), SPHERE3, dt=1e-3, t_max=5.0, trials=200, seed=1)
    pool = run_pool(cfg)
    steps = pool.steps[pool.steps >= 0]
    np.testing.assert_array_equal(pool.times[pool.steps >= 0], steps * cfg.dt)


def test_getoor_mean_one_dimension():
    cfg = SimConfig(SubordinatorSpec.stable(1.5), TargetSpec(SphereExterior(1.0, 1)),
                    dt=1e-4, t_max=1e3, trials=5000, seed=0)
    x = run_pool(cfg).times
    assert np.all(np.isfinite(x))
    se = x.std() / math.sqrt(x.size)
    assert abs(x.mean() - getoor_mean_fht(1.5, 1.0, 1.0, 1)) < 3 * se


def test_short_time_rate_halfline():
    """P(tau <= t) / t approaches rho for small t (checked at the Monte Carlo resolution)."""
    spec = SubordinatorSpec.stable(1.5)
    rho = rate_closed_form(spec, HALFLINE).rho
    cfg = SimConfig(spec, HALFLINE, dt=1e-5, t_max=0.01, trials=100_000, seed=0)
    times = run_pool(cfg).times
    for t in (0.01, 0.005, 0.0025):
        p = np.mean(times <= t + 1e-12)
        se = math.sqrt(p * (1 - p) / times.size) / t
        assert abs(p / t - rho) < 3 * se, (t, p / t, rho, se)


# ---- path law ------------------------------------------------------------------------

@pytest.mark.parametrize("spec", [SubordinatorSpec.stable(1.5), SubordinatorSpec.stable(0.7, K=0.5),
                                  SubordinatorSpec.tempered_stable(1.2, mu=1.0),
                                  SubordinatorSpec.gamma(1.0, 2.0)])
def test_characteristic_function_at_unit_time(spec):
    n = 40_000
    x = sample_positions(spec, [0.0, 0.0], t=1.0, dt=0.125, n=n, seed=1)
    c = np.cos(x[:, 0])
    assert abs(c.mean() - math.exp(-laplace_exponent(spec, 1.0))) < 3 * c.std() / math.sqrt(n)


def test_gamma_mean_squared_displacement():
    C, mu, d, t, n = 1.0, 2.0, 2, 1.0, 40_000
    x = sample_positions(SubordinatorSpec.gamma(C, mu), np.ones(d), t=t, dt=0.05, n=n, seed=2)
    r2 = np.sum((x - 1.0) ** 2, axis=1)
    assert abs(r2.mean() - 2 * d * C * t / mu) < 3 * r2.std() / math.sqrt(n)


def test_subordinator_values_laplace():
    spec, n = SubordinatorSpec.tempered_stable(1.0, mu=0.5), 20_000
    s = subordinator_values(spec, 1.0, 0.1, n, seed=3)
    w = np.exp(-s)
    assert abs(w.mean() - math.exp(-laplace_exponent(spec, 1.0))) < 3 * w.std() / math.sqrt(n)


def test_sample_positions_requires_grid_multiple():
    with pytest.raises(ValueError):
        sample_positions(SubordinatorSpec.stable(1.0), [0.0], t=1.0, dt=0.3, n=2)


# ---- discretization and censoring ------------------------------------------------------

def test_refinement_consistency():
    spec = SubordinatorSpec.stable(1.0)
    coarse = run_pool(SimConfig(spec, SPHERE3, dt=2e-4, t_max=0.1, trials=100_000, seed=0)).times
    fine = run_pool(SimConfig(spec, SPHERE3, dt=1e-4, t_max=0.1, trials=100_000, seed=1)).times
    for t in (0.02, 0.05, 0.1):
        a, b = np.mean(coarse <= t + 1e-12), np.mean(fine <= t + 1e-12)
        se = math.sqrt(a * (1 - a) / coarse.size + b * (1 - b) / fine.size)
        assert abs(a - b) < 3 * se, (t, a, b, se)


def test_censoring_monotone_and_nested():
    spec = SubordinatorSpec.stable(1.0)
    pools = [run_pool(SimConfig(spec, ANNULUS3, dt=1e-3, t_max=tm, trials=1500, seed=4))
             for tm in (0.5, 1.0, 2.0, 4.0)]
    fracs = [p.censored_fraction for p in pools]
    assert all(b <= a for a, b in zip(fracs, fracs[1:]))
    # identical streams: a trial hitting before the shorter horizon hits at the same step later
    for short, long in zip(pools, pools[1:]):
        hit = short.steps >= 0
        np.testing.assert_array_equal(short.steps[hit], long.steps[hit])


def test_censored_warning(caplog):
    cfg = SimConfig(SubordinatorSpec.stable(1.0), ANNULUS3, dt=1e-2, t_max=0.02, trials=50)
    with caplog.at_level(logging.WARNING):
        pool = run_pool(cfg)
    assert pool.censored_fraction > 0.5
    assert any("censored fraction" in r.message for r in caplog.records)


def test_box_exit_warning(caplog):
    target = generate_poisson_field(0.01, 0.1, 2, 2.0, rng=rng.generator(0, rng.POISSON_FIELD))
    cfg = SimConfig(SubordinatorSpec.stable(1.5), target, dt=1e-2, t_max=5.0, trials=50)
    with caplog.at_level(logging.WARNING):
        pool = run_pool(cfg)
    assert pool.exited_box > 0
    assert any("box" in r.message for r in caplog.records)


# ---- determinism ---------------------------------------------------------------------

def test_pool_independent_of_threads():
    cfg = SimConfig(SubordinatorSpec.tempered_stable(1.3, mu=0.5), SPHERE3, dt=1e-3, t_max=2.0,
                    trials=1000, seed=123)
    a, b = run_pool(cfg, threads=1), run_pool(cfg, threads=8)
    np.testing.assert_array_equal(a.steps, b.steps)


def test_single_trial_pool_matches_simulate_fht():
    cfg = SimConfig(SubordinatorSpec.gamma(1.0, 1.0), SPHERE3, dt=1e-3, t_max=3.0, trials=1, seed=9)
    assert run_pool(cfg)[0] == simulate_fht(cfg, 0)
    big = SimConfig(cfg.spec, cfg.target, cfg.dt, cfg.t_max, trials=300, seed=9)
    pool = run_pool(big)
    for i in (0, 17, 299):
        assert pool[i] == simulate_fht(big, i)


def test_different_seeds_differ():
    base = dict(spec=SubordinatorSpec.stable(1.0), target=SPHERE3, dt=1e-3, t_max=2.0, trials=200)
    assert not np.array_equal(run_pool(SimConfig(seed=1, **base)).steps, run_pool(SimConfig(seed=2, **base)).steps)


def test_pool_csv(tmp_path):
    pool = FhtPool(np.array([3, -1, 10]), dt=0.5)
    path = tmp_path / "pool.csv"
    write_pool_csv(pool, path, comment="seed = 0")
    assert path.read_text() == "# seed = 0\ntrial,fht,censored\n0,1.5,0\n1,inf,1\n2,5.0,0\n"
    assert pool.censored_fraction == pytest.approx(1 / 3)
    assert list(pool[0:2].steps) == [3, -1]
