import math

import numpy as np
import pytest
from scipy import stats

from bnpricing.errors import DomainError, StepTooLarge
from bnpricing.market import MarketCoefficients
from bnpricing.mmm import MmmParams, PutContract, fair_put_price, phi
from bnpricing.simulate import (
    McEstimate,
    SimConfig,
    check_lambda_martingale,
    constant_mix_log_values,
    empirical_growth_rate,
    growth_race,
    make_rng,
    mc_fair_price,
    run_euler,
    sample_sstar_q,
    simulate_p_path,
    simulate_q_path,
    uniform_grid,
)
from bnpricing.special import noncentral_chi2_cdf

P = MmmParams()
PUT = PutContract(100.0, 30.83)


def test_config_validation():
    with pytest.raises(DomainError):
        SimConfig(n_paths=0)
    with pytest.raises(DomainError):
        SimConfig(dt=0.0)
    with pytest.raises(DomainError):
        SimConfig(seed=-1)


def test_estimate_within():
    assert McEstimate(1.0, 0.1, 10).within(1.29)
    assert not McEstimate(1.0, 0.1, 10).within(1.31)


def test_q_sampler_mean_and_cdf():
    rng = make_rng(1)
    n = 1_000_000
    draws = sample_sstar_q(P, 2.0, 100.0, 12.0, rng, size=n)
    c = phi(P, 12.0) - phi(P, 2.0)
    se = draws.std(ddof=1) / math.sqrt(n)
    assert abs(draws.mean() - (100.0 + 4 * c)) <= 3 * se
    sub = draws[:100_000]
    res = stats.kstest(sub / c, lambda x: noncentral_chi2_cdf(np.asarray(x), 4.0, 100.0 / c))
    assert res.pvalue > 0.01


def test_q_sampler_degenerate_and_errors():
    d = sample_sstar_q(P, 5.0, 100.0, 5.0 + 1e-12, make_rng(2), size=1000)
    assert np.allclose(d, 100.0, rtol=1e-4)
    with pytest.raises(DomainError):
        sample_sstar_q(P, 5.0, 100.0, 5.0, make_rng(2))
    with pytest.raises(DomainError):
        sample_sstar_q(P, 0.0, -1.0, 5.0, make_rng(2))


def test_q_path_is_chained_exact_law():
    times = np.linspace(0.0, 10.0, 11)
    ends = np.array([simulate_q_path(P, times, 100.0, make_rng(3, 3, k)).levels[-1]
                     for k in range(4000)])
    c = phi(P, 10.0) - phi(P, 0.0)
    res = stats.kstest(ends / c, lambda x: noncentral_chi2_cdf(np.asarray(x), 4.0, 100.0 / c))
    assert res.pvalue > 0.01
    with pytest.raises(DomainError):
        simulate_q_path(P, [0.0, 1.0, 1.0], 100.0, make_rng(3))


def test_mc_fair_price_determinism_and_k0():
    cfg = SimConfig(n_paths=100_000, seed=7)
    a = mc_fair_price(P, PUT, 0.0, 100.0, cfg)
    b = mc_fair_price(P, PUT, 0.0, 100.0, cfg)
    assert a == b
    assert mc_fair_price(P, PutContract(0.0, 30.83), 0.0, 100.0, cfg) == McEstimate(0.0, 0.0, 100_000)
    assert a.within(fair_put_price(P, 0.0, 100.0, PUT))
    with pytest.raises(DomainError):
        mc_fair_price(P, PUT, 30.83, 100.0, cfg)


def test_mc_antithetic_consistency():
    plain = mc_fair_price(P, PUT, 0.0, 100.0, SimConfig(n_paths=400_000, seed=8))
    anti = mc_fair_price(P, PUT, 0.0, 100.0, SimConfig(n_paths=400_000, seed=8, antithetic=True))
    assert anti.n_paths == 400_000
    assert abs(plain.value - anti.value) <= 6 * max(plain.stderr, anti.stderr)


def test_mc_stderr_scaling():
    # a shorter maturity keeps the estimator's tail light enough for a clean 1/sqrt(n) law
    put = PutContract(100.0, 5.0)
    ses = [mc_fair_price(P, put, 0.0, 100.0, SimConfig(n_paths=n, seed=9)).stderr
           for n in (10_000, 40_000, 160_000)]
    assert ses[0] / ses[1] == pytest.approx(2.0, rel=0.2)
    assert ses[1] / ses[2] == pytest.approx(2.0, rel=0.2)


def test_euler_trivial_density_and_horizon_zero():
    out = run_euler(P, uniform_grid(0.0, 2.0, 1 / 252), 100.0, 20, 1)
    assert np.all(out.density.log_lambda == 0.0)
    assert out.floor_hits == 0
    path = simulate_p_path(P, 3.0, 50.0, 0.0, SimConfig())
    assert path.times.tolist() == [3.0] and path.levels.tolist() == [50.0]


def test_euler_mean_matches_exact_law_without_drift():
    n = 20_000
    out = run_euler(P, uniform_grid(0.0, 5.0, 1 / 252), 100.0, n, 2)
    s_t = out.levels[:, -1]
    target = 100.0 + 4 * (phi(P, 5.0) - phi(P, 0.0))
    assert abs(s_t.mean() - target) <= 6 * s_t.std(ddof=1) / math.sqrt(n)


def test_euler_and_exact_agree_in_law_without_drift():
    out = run_euler(P, uniform_grid(0.0, 5.0, 1 / 2520), 100.0, 3000, 3)
    exact = sample_sstar_q(P, 0.0, 100.0, 5.0, make_rng(4), size=3000)
    assert stats.ks_2samp(out.levels[:, -1], exact).pvalue > 0.01


def test_euler_determinism_and_recording():
    grid = uniform_grid(0.0, 1.0, 1 / 252)
    idx = np.array([0, 10, 252])
    a = run_euler(MmmParams(lambda_bar=1.0), grid, 100.0, 5, 11, record_idx=idx)
    b = run_euler(MmmParams(lambda_bar=1.0), grid, 100.0, 5, 11, record_idx=idx)
    assert np.array_equal(a.levels, b.levels) and np.array_equal(a.density.log_lambda,
                                                                 b.density.log_lambda)
    assert a.times.tolist() == [grid[0], grid[10], grid[252]]
    assert np.all(a.levels[:, 0] == 100.0)
    # path p uses its own substream: a larger batch reproduces the first paths
    c = run_euler(MmmParams(lambda_bar=1.0), grid, 100.0, 8, 11, record_idx=idx)
    assert np.array_equal(c.levels[:5], a.levels)


def test_euler_grid_errors():
    with pytest.raises(DomainError):
        run_euler(P, [0.0], 100.0, 1, 1)
    with pytest.raises(DomainError):
        run_euler(P, [0.0, 1.0, 0.5], 100.0, 1, 1)
    with pytest.raises(DomainError):
        run_euler(P, [0.0, 1.0], 100.0, 1, 1, record_idx=[2])


def test_step_too_large():
    # with a * dt of order one the noise regularly overshoots the drift's repulsion
    fast = MmmParams(a_bar=1.0)
    with pytest.raises(StepTooLarge):
        run_euler(fast, uniform_grid(0.0, 20.0, 2.0), 100.0, 2000, 1)


def test_martingale_variance_grows_with_t():
    params = MmmParams(lambda_bar=1.0)
    cfg = SimConfig(n_paths=4000, seed=5, dt=1 / 252)
    short = check_lambda_martingale(params, 5.0, cfg)
    long = check_lambda_martingale(params, 10.0, cfg)
    assert short.within(1.0) and long.within(1.0)
    assert long.stderr > short.stderr
    assert check_lambda_martingale(P, 3.0, cfg) == McEstimate(1.0, 0.0, 4000)


def test_empirical_growth_rate():
    t = np.linspace(0.0, 10.0, 11)
    assert empirical_growth_rate(t, np.full(11, 3.0)) == 0.0
    assert empirical_growth_rate(t, np.exp(0.05 * t)) == pytest.approx(0.05, rel=1e-14)
    with pytest.raises(DomainError):
        empirical_growth_rate([0.0], [1.0])
    with pytest.raises(DomainError):
        empirical_growth_rate([0.0, 0.0], [1.0, 2.0])


def test_constant_mix_shares_brownian_path():
    coeffs = MarketCoefficients(mu=[0.08], sigma=[[0.2]])
    _, logs = constant_mix_log_values(coeffs, [[1.0], [1.0]], 5.0, 1 / 12, make_rng(1))
    assert np.array_equal(logs[0], logs[1])
    times, logs = constant_mix_log_values(coeffs, [[1.0]], 4000.0, 1.0, make_rng(2))
    assert empirical_growth_rate(times, np.exp(logs[0])) == pytest.approx(0.06, abs=0.02)


def test_growth_race_gop_dominates():
    coeffs = MarketCoefficients(mu=[0.10, 0.03], sigma=[[0.25, 0.0], [0.05, 0.05]])
    frac = growth_race(coeffs, [0.2, 0.8], horizon=200.0, n_seeds=50)
    assert frac >= 0.95
