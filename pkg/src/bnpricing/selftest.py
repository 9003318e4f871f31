"""Fast consistency checks shipped with the package (``bnprice selftest``)."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from bnpricing.market import (
    MarketCoefficients,
    instantaneous_growth_rate,
    solve_gop,
)
from bnpricing.mmm import MmmParams, PutContract, fair_put_price
from bnpricing.simulate import SimConfig, mc_fair_price
from bnpricing.special import noncentral_chi2_cdf, sbp4_transition_density

REFERENCE_T = 30.83


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def random_feasible_market(rng: np.random.Generator, m: int, n: int) -> MarketCoefficients:
    """Random snapshot whose drift is ``r 1 + sigma theta``, so a GOP exists."""
    sigma = rng.normal(0.0, 0.3, size=(m, n))
    theta = rng.normal(0.0, 0.4, size=n)
    r = rng.uniform(-0.02, 0.08)
    return MarketCoefficients(mu=r + sigma @ theta, sigma=sigma)


def chi2_4_cdf_by_quadrature(x: float, lam: float) -> float:
    """P(chi2'_4(lam) <= x) integrating the squared Bessel density with unit clock."""
    # law of S_1 started at s is chi2'_4(s); phi_from=0, phi_to=1 gives c=1
    val, _ = integrate.quad(lambda y: float(sbp4_transition_density(lam, y, 0.0, 1.0)),
                            0.0, x, epsabs=1e-13, epsrel=1e-12, limit=200)
    return val


def _check_psi(shift: float) -> tuple[bool, str]:
    worst = 0.0
    for lam in (0.5, 2.83, 10.0):
        for x in np.linspace(0.5, 30.0, 5):
            ref = chi2_4_cdf_by_quadrature(float(x), lam)
            worst = max(worst, abs(noncentral_chi2_cdf(x, 4.0, lam) + shift - ref))
    xs = np.linspace(0.0, 40.0, 9)
    worst_exp = float(np.max(np.abs(noncentral_chi2_cdf(xs, 2.0, 0.0) + shift
                                    + np.expm1(-xs / 2))))
    worst_atom = max(abs(noncentral_chi2_cdf(0.0, 0.0, lam) + shift - math.exp(-lam / 2))
                     for lam in (0.1, 2.83, 25.0))
    ok = worst <= 1e-8 and worst_exp <= 1e-12 and worst_atom <= 1e-12
    return ok, f"quad={worst:.1e} chi2_2={worst_exp:.1e} atom={worst_atom:.1e}"


def _check_gop(n_markets: int = 100, seed: int = 42) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst_res = worst_sum = worst_lam = 0.0
    beaten = 0
    for _ in range(n_markets):
        m, n = rng.integers(1, 7, size=2)
        coeffs = random_feasible_market(rng, int(m), int(n))
        gop = solve_gop(coeffs)
        worst_res = max(worst_res, gop.residual)
        worst_sum = max(worst_sum, abs(gop.pi_star.sum() - 1.0))
        g_star = instantaneous_growth_rate(coeffs, gop.pi_star)
        for _ in range(10):
            eps = rng.normal(0.0, 0.1, size=int(m))
            eps -= eps.mean()
            pi = gop.pi_star + eps
            pi /= pi.sum()
            beaten += instantaneous_growth_rate(coeffs, pi) > g_star + 1e-12
            worst_lam = max(worst_lam, abs(pi @ coeffs.mu - pi @ coeffs.sigma @ gop.theta
                                           - gop.lambda_star))
    ok = worst_res <= 1e-10 and worst_sum <= 1e-12 and worst_lam <= 1e-10 and beaten == 0
    return ok, (f"resid={worst_res:.1e} sum={worst_sum:.1e} "
                f"lambda={worst_lam:.1e} beaten={beaten}")


def _check_mc(shift: float, n_paths: int = 100_000) -> tuple[bool, str]:
    params = MmmParams()
    contract = PutContract(100.0, REFERENCE_T)
    closed = fair_put_price(params, 0.0, 100.0, contract) + shift
    est = mc_fair_price(params, contract, 0.0, 100.0, SimConfig(n_paths=n_paths, seed=42))
    return est.within(closed), f"closed={closed:.4f} mc={est.value:.4f}+-{est.stderr:.4f}"


def run_checks(perturb: float = 0.0) -> list[CheckResult]:
    """Run every check; ``perturb`` is added to the quantities under test."""
    out = []
    for name, fn in (("psi_oracles", lambda: _check_psi(perturb)),
                     ("gop_solver", _check_gop),
                     ("mc_cross_check", lambda: _check_mc(perturb * 1e6))):
        start = time.perf_counter()
        passed, detail = fn()
        out.append(CheckResult(name, bool(passed), detail, time.perf_counter() - start))
    return out
