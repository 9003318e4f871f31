import numpy as np
import pytest

from bnpricing.calibrate import IndexSeries
from bnpricing.errors import DimensionMismatch, DomainError, SeriesContractMismatch
from bnpricing.hedge import (
    InitialValueRule,
    backtest,
    hedge_position,
    phi_matrix_hedge,
    two_asset_phi_hedge,
)
from bnpricing.mmm import (
    MmmParams,
    PutContract,
    fair_put_delta,
    fair_put_price,
    risk_neutral_put_price,
    volatility_theta,
)
from bnpricing.simulate import make_rng, simulate_q_path

P = MmmParams()
T = 30.83
PUT = PutContract(100.0, T)


def q_series(seed, years=T, steps=2000):
    times = np.linspace(0.0, years, steps + 1)
    return IndexSeries(times, simulate_q_path(P, times, 100.0, make_rng(seed, 3, 0)).levels)


def test_position_arithmetic():
    pos = hedge_position(P, 0.0, 100.0, PUT, 20.0)
    d = fair_put_delta(P, 0.0, 100.0, PUT)
    assert pos.units_stock == d
    assert pos.units_savings + pos.units_stock * 100.0 == pytest.approx(20.0, abs=1e-13)
    # deep out of the money at short maturity: all value sits in savings units
    far = hedge_position(P, 0.0, 1e4, PutContract(100.0, 0.5), 3.0)
    assert far.units_stock == pytest.approx(0.0, abs=1e-9)
    assert far.units_savings == pytest.approx(3.0, abs=1e-5)
    # delta of -1 at s = K gives units_savings = value + s
    deep = hedge_position(P, 0.0, 5.0, PutContract(100.0, 0.05), 95.0)
    assert deep.units_stock == pytest.approx(-1.0, abs=1e-6)
    assert deep.units_savings == pytest.approx(95.0 + 5.0, abs=1e-5)
    with pytest.raises(DomainError):
        hedge_position(P, T, 100.0, PUT, 1.0)
    with pytest.raises(DomainError):
        hedge_position(P, 0.0, -1.0, PUT, 1.0)


def test_phi_matrix_general_form():
    phi_m = np.array([[1.0, 0.3], [1.0, -0.2]])
    s_tilde = np.array([2.0, 0.5])
    xi = np.array([1.5, -0.4])
    units = phi_matrix_hedge(phi_m, s_tilde, xi)
    # value identity: sum_j delta_j S~_j = xi_0
    assert units @ s_tilde == pytest.approx(xi[0], abs=1e-14)
    # exposure identity: sum_j delta_j S~_j Phi^{j,1} = xi_1
    assert (units * s_tilde) @ phi_m[:, 1] == pytest.approx(xi[1], abs=1e-14)
    with pytest.raises(DimensionMismatch):
        phi_matrix_hedge(phi_m, s_tilde, np.ones(3))
    with pytest.raises(DomainError):
        phi_matrix_hedge(phi_m, np.array([1.0, 0.0]), xi)


def test_phi_form_reduces_to_delta_hedge():
    # price in stock units is p/s; its integrand against the benchmark-neutral
    # Brownian motion is x = (delta s - p) / s * theta
    for t, s in ((0.0, 100.0), (10.0, 70.0), (25.0, 180.0)):
        p = fair_put_price(P, t, s, PUT)
        d = fair_put_delta(P, t, s, PUT)
        theta = volatility_theta(P, t, s)
        x = (d * s - p) / s * theta
        pos = two_asset_phi_hedge(P, t, s, p, x)
        ref = hedge_position(P, t, s, PUT, p)
        assert pos.units_stock == pytest.approx(ref.units_stock, abs=1e-12)
        assert pos.units_savings == pytest.approx(ref.units_savings, abs=1e-10)


def test_rule_parsing():
    assert InitialValueRule.parse("fair") is InitialValueRule.FAIR
    assert InitialValueRule.parse(" RN ") is InitialValueRule.RISK_NEUTRAL
    with pytest.raises(DomainError):
        InitialValueRule.parse("bs")


def test_single_observation_report():
    series = IndexSeries([0.0], [90.0])
    rep = backtest(P, series, PUT, "fair")
    p0 = fair_put_price(P, 0.0, 90.0, PUT)
    assert rep.rebalance_count == 0
    assert rep.tracking_error == pytest.approx(abs(p0 - 10.0), abs=1e-14)
    rn = backtest(P, series, PUT, InitialValueRule.RISK_NEUTRAL)
    assert rn.portfolio_values[0] == risk_neutral_put_price(P, 0.0, 90.0, PUT)


def test_maturity_mismatch():
    series = IndexSeries([0.0, 1.0, 2.0], [100.0, 101.0, 99.0])
    with pytest.raises(SeriesContractMismatch):
        backtest(P, series, PUT)
    with pytest.raises(SeriesContractMismatch):
        backtest(P, IndexSeries([T], [100.0]), PUT)


def test_backtest_report_alignment_and_self_financing():
    series = q_series(1)
    rep = backtest(P, series, PUT)
    n = len(series)
    for arr in (rep.times, rep.levels, rep.option_values, rep.portfolio_values, rep.deltas):
        assert arr.shape == (n,)
    assert rep.rebalance_count == n - 1
    assert rep.tracking_error >= 0
    assert rep.portfolio_values[0] == fair_put_price(P, 0.0, 100.0, PUT)
    assert rep.option_values[-1] == rep.terminal_payoff
    # cash account implied by consecutive holdings never jumps at a rebalance
    savings = rep.portfolio_values[:-1] - rep.deltas[:-1] * rep.levels[:-1]
    before = savings[:-1] + rep.deltas[:-2] * rep.levels[1:-1]
    assert before == pytest.approx(rep.portfolio_values[1:-1], abs=1e-9)


def test_risk_neutral_start_carries_the_gap():
    for seed in range(5):
        series = q_series(seed)
        fair = backtest(P, series, PUT, "fair")
        rn = backtest(P, series, PUT, "rn")
        gap = rn.portfolio_values[0] - fair.portfolio_values[0]
        assert np.all(rn.portfolio_values >= fair.portfolio_values)
        assert rn.portfolio_values - fair.portfolio_values == pytest.approx(gap, abs=1e-9)
        assert rn.terminal_surplus > 0
        assert rn.terminal_surplus == pytest.approx(gap + fair.terminal_surplus, abs=1e-9)


def test_one_step_replication():
    # the hedge reproduces the option's change over a short step up to second order
    t, s, dt = 0.0, 100.0, 1e-4
    times = np.array([t, t + dt])
    ends = np.array([simulate_q_path(P, times, s, make_rng(2, 3, k)).levels[-1] for k in range(200)])
    pos = hedge_position(P, t, s, PUT, fair_put_price(P, t, s, PUT))
    p1 = fair_put_price(P, t + dt, ends, PUT)
    v1 = pos.units_savings + pos.units_stock * ends
    err = np.abs(v1 - p1)
    assert np.median(err) < 1e-3 * np.std(p1 - pos.value) + 1e-4


def test_tracking_error_shrinks_with_frequency():
    errs = {}
    for steps in (500, 1000, 2000, 4000):
        errs[steps] = np.median([backtest(P, q_series(s, steps=steps), PUT).tracking_error
                                 for s in range(12)])
    assert errs[4000] < errs[1000] < errs[500] * 1.05


def test_csv_output(tmp_path):
    rep = backtest(P, q_series(3, steps=50), PUT)
    path = tmp_path / "h.csv"
    rep.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,s,option_value,portfolio_value,delta"
    assert len(lines) == 52
    first = [float(v) for v in lines[1].split(",")]
    assert first[3] == rep.portfolio_values[0]
