"""Self-financing delta hedge of the fair put and a discrete-time backtest.

With the savings account and the stock GOP as the only instruments, the
general hedge ``diag(S~)^-1 (Phi^T)^-1 xi`` reduces to holding the fair delta
in the stock and the remainder of the portfolio value in the savings account.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass

import numpy as np

from bnpricing.calibrate import IndexSeries
from bnpricing.errors import DimensionMismatch, DomainError, SeriesContractMismatch
from bnpricing.mmm import (
    MmmParams,
    PutContract,
    fair_put_delta,
    fair_put_price,
    risk_neutral_put_price,
    volatility_theta,
)

MATURITY_TOL = 1e-9


class InitialValueRule(enum.Enum):
    FAIR = "fair"
    RISK_NEUTRAL = "rn"

    @classmethod
    def parse(cls, text: str) -> "InitialValueRule":
        key = text.strip().lower()
        aliases = {"fair": cls.FAIR, "rn": cls.RISK_NEUTRAL,
                   "risk-neutral": cls.RISK_NEUTRAL, "riskneutral": cls.RISK_NEUTRAL}
        if key not in aliases:
            raise DomainError(f"unknown initial value rule {text!r} (use fair or rn)")
        return aliases[key]


@dataclass(frozen=True)
class HedgePosition:
    units_savings: float
    units_stock: float
    value: float


@dataclass(frozen=True)
class BacktestReport:
    times: np.ndarray
    levels: np.ndarray
    option_values: np.ndarray
    portfolio_values: np.ndarray
    deltas: np.ndarray
    terminal_payoff: float
    tracking_error: float
    max_abs_gap: float
    rebalance_count: int

    @property
    def terminal_surplus(self) -> float:
        return float(self.portfolio_values[-1] - self.terminal_payoff)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "s", "option_value", "portfolio_value", "delta"])
            for row in zip(self.times, self.levels, self.option_values,
                           self.portfolio_values, self.deltas):
                w.writerow([repr(float(v)) for v in row])


def phi_matrix_hedge(phi_matrix, s_tilde, xi) -> np.ndarray:
    """Units ``diag(s_tilde)^-1 (Phi^T)^-1 xi`` of each numeraire-denominated account.

    Row ``j`` of ``phi_matrix`` holds ``(1, Phi^{j,1}, ...)``; ``xi`` is ordered
    like the columns: the claim's denominated price first, then the negated
    martingale-representation integrands.
    """
    phi_matrix = np.asarray(phi_matrix, dtype=float)
    s_tilde = np.asarray(s_tilde, dtype=float)
    xi = np.asarray(xi, dtype=float)
    k = s_tilde.size
    if phi_matrix.shape != (k, k) or xi.shape != (k,):
        raise DimensionMismatch("Phi must be square and match s_tilde and xi")
    if np.any(s_tilde <= 0):
        raise DomainError("denominated account values must be positive")
    return np.linalg.solve(phi_matrix.T, xi) / s_tilde


def two_asset_phi_hedge(params: MmmParams, t, s, option_value, x) -> HedgePosition:
    """General-form hedge specialised to (savings account, stock GOP).

    In stock-GOP units the savings account is ``1/s`` with volatility
    ``-theta`` and the stock is the constant 1, so ``Phi = [[1, theta], [1, 0]]``.
    ``x`` is the integrand of the denominated option price against the
    benchmark-neutral Brownian motion.
    """
    theta = volatility_theta(params, t, s)
    phi_m = np.array([[1.0, theta], [1.0, 0.0]])
    units = phi_matrix_hedge(phi_m, np.array([1.0 / s, 1.0]),
                             np.array([option_value / s, -x]))
    return HedgePosition(units_savings=float(units[0]), units_stock=float(units[1]),
                         value=float(option_value))


def hedge_position(params: MmmParams, t: float, s: float, contract: PutContract,
                   current_value: float) -> HedgePosition:
    """Fair delta in the stock, the rest of ``current_value`` in the savings account."""
    if not 0 <= t < contract.maturity:
        raise DomainError("need 0 <= t < T")
    if not s > 0:
        raise DomainError("index level must be positive")
    delta = float(fair_put_delta(params, t, s, contract))
    return HedgePosition(units_savings=current_value - delta * s, units_stock=delta,
                         value=current_value)


def backtest(params: MmmParams, series: IndexSeries, contract: PutContract,
             initial_value_rule: InitialValueRule | str = InitialValueRule.FAIR
             ) -> BacktestReport:
    """Rebalance to the fair delta at every observation and track the hedge.

    The portfolio starts at the chosen rule's price.  Between observations the
    holdings are frozen, so the value moves by ``delta * (s_next - s)``; at
    each observation the holdings are reset without adding or removing cash.

    Raises:
        SeriesContractMismatch: the last observation is not at maturity.
    """
    if isinstance(initial_value_rule, str):
        initial_value_rule = InitialValueRule.parse(initial_value_rule)
    times, levels = series.times, series.values
    n = times.size
    T = contract.maturity
    price_at = (risk_neutral_put_price if initial_value_rule is InitialValueRule.RISK_NEUTRAL
                else fair_put_price)

    if n == 1:
        if not times[0] < T:
            raise SeriesContractMismatch("single observation must precede maturity")
        initial = float(price_at(params, times[0], levels[0], contract))
        payoff = float(contract.payoff(levels[0]))
        return BacktestReport(
            times=times.copy(), levels=levels.copy(),
            option_values=np.array([float(fair_put_price(params, times[0], levels[0], contract))]),
            portfolio_values=np.array([initial]), deltas=np.zeros(1),
            terminal_payoff=payoff, tracking_error=abs(initial - payoff),
            max_abs_gap=abs(initial - float(fair_put_price(params, times[0], levels[0], contract))),
            rebalance_count=0)

    if abs(times[-1] - T) > MATURITY_TOL * max(1.0, T):
        raise SeriesContractMismatch(
            f"last observation at {times[-1]!r} but contract matures at {T!r}")
    if times[0] < 0:
        raise SeriesContractMismatch("series starts before inception")
    times = times.copy()
    times[-1] = T

    option_values = np.asarray(fair_put_price(params, times, levels, contract))
    deltas = np.empty(n)
    deltas[:-1] = fair_put_delta(params, times[:-1], levels[:-1], contract)
    deltas[-1] = deltas[-2]

    v0 = float(price_at(params, times[0], levels[0], contract))
    gains = deltas[:-1] * np.diff(levels)
    values = np.concatenate([[v0], v0 + np.cumsum(gains)])

    # holdings after each trade; value just before trade i+1 uses holdings i
    savings = values[:-1] - deltas[:-1] * levels[:-1]
    before = savings[:-1] + deltas[:-2] * levels[1:-1]
    after = savings[1:] + deltas[1:-1] * levels[1:-1]
    scale = np.maximum(1.0, np.abs(values[1:-1]))
    assert np.all(np.abs(before - after) <= 1e-12 * scale + 1e-12 * np.abs(savings[1:])), \
        "rebalancing injected or removed cash"

    payoff = float(contract.payoff(levels[-1]))
    return BacktestReport(
        times=times, levels=levels.copy(), option_values=option_values,
        portfolio_values=values, deltas=deltas, terminal_payoff=payoff,
        tracking_error=abs(float(values[-1]) - payoff),
        max_abs_gap=float(np.max(np.abs(values - option_values))),
        rebalance_count=n - 1)
