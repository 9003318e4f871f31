"""Minimal market model in trendline activity time.

The discounted stock GOP is a time-changed squared Bessel process of
dimension four under the benchmark-neutral measure, with intrinsic clock
``phi(t) = exp(tau0_bar + a_bar * t)``.  All prices are in units of the
savings account.  Functions broadcast over numpy arrays of ``t`` and ``s``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from bnpricing.errors import DomainError
from bnpricing.special import noncentral_chi2_cdf

# trendline fitted to the savings-account-discounted MCI, Jan 1984 - Nov 2014
MCI_TAU0_BAR = 2.15
MCI_A_BAR = 0.053


@dataclass(frozen=True)
class MmmParams:
    """Trendline activity time ``tau0_bar + a_bar t`` and initial level ``s0``.

    ``lambda_bar`` scales the risk-adjusted return (``lambda* = lambda_bar *
    a_bar``); it only matters for real-world simulation.
    """

    tau0_bar: float = MCI_TAU0_BAR
    a_bar: float = MCI_A_BAR
    lambda_bar: float = 0.0
    s0: float = 100.0

    def __post_init__(self):
        if not np.isfinite([self.tau0_bar, self.a_bar, self.lambda_bar, self.s0]).all():
            raise DomainError("MMM parameters must be finite")
        if not self.a_bar > 0:
            raise DomainError(f"activity slope must be positive, got {self.a_bar!r}")
        if not self.s0 > 0:
            raise DomainError(f"initial level must be positive, got {self.s0!r}")
        if self.lambda_bar < 0:
            raise DomainError("lambda_bar must be nonnegative")


@dataclass(frozen=True)
class PutContract:
    """European put paying ``max(0, K - S_T)`` at ``T`` (years from inception).

    A zero strike is accepted as the degenerate, worthless contract.
    """

    strike: float
    maturity: float

    def __post_init__(self):
        if not (np.isfinite(self.strike) and self.strike >= 0):
            raise DomainError(f"strike must be >= 0, got {self.strike!r}")
        if not (np.isfinite(self.maturity) and self.maturity > 0):
            raise DomainError(f"maturity must be positive, got {self.maturity!r}")

    def payoff(self, s):
        return np.maximum(0.0, self.strike - np.asarray(s, dtype=float))


def _as_level(s):
    s = np.asarray(s, dtype=float)
    if np.any(~(s > 0)):
        raise DomainError("index level must be positive")
    return s


def _scalar(out):
    return float(out) if np.ndim(out) == 0 else out


def activity_time(params: MmmParams, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("time must be nonnegative")
    return _scalar(params.tau0_bar + params.a_bar * t)


def phi(params: MmmParams, t):
    return _scalar(np.exp(activity_time(params, t)))


def volatility_theta(params: MmmParams, t, s):
    """Calendar-time volatility ``sqrt(4 phi(t) a / s)`` of the stock GOP."""
    s = _as_level(s)
    return _scalar(np.sqrt(4.0 * phi(params, t) * params.a_bar / s))


def sigma_sstar(params: MmmParams, t, s):
    """Volatility of the Radon-Nikodym density of the benchmark-neutral measure."""
    s = _as_level(s)
    out = params.lambda_bar * np.sqrt(params.a_bar * s / (4.0 * phi(params, t)))
    theta = volatility_theta(params, t, s)
    lam_star = params.lambda_bar * params.a_bar
    assert np.allclose(out * theta, lam_star, rtol=1e-12, atol=1e-300), \
        "sigma^{S*} * theta must equal lambda*"
    return _scalar(out)


def _check_before_maturity(t, T):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("time must be nonnegative")
    if np.any(t >= T):
        raise DomainError("need t < T")
    return t


def noncentrality(params: MmmParams, t, s, T):
    """``s / (phi(T) - phi(t))``."""
    t = _check_before_maturity(t, T)
    s = _as_level(s)
    return _scalar(s / (phi(params, T) - phi(params, t)))


def savings_bond_defect(params: MmmParams, t, s, T):
    """``exp(-lambda/2)``: probability mass the squared Bessel(0) law puts at zero."""
    return _scalar(np.exp(-0.5 * np.asarray(noncentrality(params, t, s, T))))


def _price_terms(params, t, s, contract):
    """(fair price, K * defect) on the region t < T."""
    T = contract.maturity
    K = contract.strike
    dphi = phi(params, T) - phi(params, t)
    lam = s / dphi
    x = K / dphi
    psi0 = noncentral_chi2_cdf(x, 0.0, lam)
    psi4 = noncentral_chi2_cdf(x, 4.0, lam)
    defect = np.exp(-0.5 * lam)
    # psi0 - defect is a probability; rounding can push it a hair below zero
    upper = K * np.maximum(psi0 - defect, 0.0)
    price = upper - s * psi4
    slack = 1e-9 * max(K, 1.0)
    assert np.all(price >= -slack) and np.all(price <= upper + slack) \
        and np.all(upper <= K + slack), "fair put price out of [0, K]"
    return np.clip(price, 0.0, upper), K * defect


def _split_maturity(t, s, contract):
    t, s = np.broadcast_arrays(np.asarray(t, dtype=float), _as_level(s))
    if np.any(t < 0) or np.any(t > contract.maturity):
        raise DomainError("need 0 <= t <= T")
    return t, s, t < contract.maturity


def _payoff_array(s, contract):
    return np.array(contract.payoff(s), dtype=float, ndmin=1).reshape(np.shape(s))


def fair_put_price(params: MmmParams, t, s, contract: PutContract):
    """Fair (benchmark-neutral) put price; the payoff itself at ``t == T``."""
    t, s, live = _split_maturity(t, s, contract)
    out = _payoff_array(s, contract)
    if np.any(live):
        out[live] = _price_terms(params, t[live], s[live], contract)[0]
    return _scalar(out)


def risk_neutral_put_price(params: MmmParams, t, s, contract: PutContract):
    """Formal risk-neutral put price: fair price plus ``K exp(-lambda/2)``.

    Risk-neutral pricing values the strike leg as the full savings-account
    bond ``K`` instead of its fair value ``K (1 - exp(-lambda/2))``; the
    difference is added back here.
    """
    t, s, live = _split_maturity(t, s, contract)
    out = _payoff_array(s, contract)
    if np.any(live):
        fair, gap = _price_terms(params, t[live], s[live], contract)
        out[live] = fair + gap
    return _scalar(out)


def fair_put_delta(params: MmmParams, t, s, contract: PutContract):
    """Stock units per option: central difference in ``s``, Richardson-extrapolated once."""
    t, s, live = _split_maturity(t, s, contract)
    out = np.array(np.where(s < contract.strike, -1.0, 0.0))
    if np.any(live):
        tl, sl = t[live], s[live]
        h = np.maximum(1e-4 * sl, 1e-6)

        def central(step):
            up = fair_put_price(params, tl, sl + step, contract)
            down = fair_put_price(params, tl, sl - step, contract)
            return (up - down) / (2.0 * step)

        coarse = central(h)
        fine = central(0.5 * h)
        out[live] = (4.0 * fine - coarse) / 3.0
    return _scalar(out)
