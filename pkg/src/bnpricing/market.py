"""Continuous m-asset, n-factor markets: growth optimal portfolio, locally
risk-free portfolio and market extension by one new account.

All solvers work on a coefficient snapshot; callers with time-varying
coefficients evaluate one snapshot per time step.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from bnpricing.errors import (
    Degenerate,
    DimensionMismatch,
    DomainError,
    InconsistentMarket,
    NoExtendedGop,
    NoGop,
    NoLrp,
)

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class MarketCoefficients:
    """Expected returns ``mu`` (length m) and volatility matrix ``sigma`` (m x n)."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.ndim == 1:
            sigma = sigma.reshape(-1, 1)
        if mu.ndim != 1 or sigma.ndim != 2:
            raise DimensionMismatch("mu must be a vector and sigma a matrix")
        if mu.shape[0] == 0 or sigma.shape[1] == 0:
            raise DimensionMismatch("need m >= 1 assets and n >= 1 factors")
        if sigma.shape[0] != mu.shape[0]:
            raise DimensionMismatch(
                f"sigma has {sigma.shape[0]} rows but mu has length {mu.shape[0]}")
        if not (np.isfinite(mu).all() and np.isfinite(sigma).all()):
            raise DomainError("market coefficients must be finite")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def m(self) -> int:
        return self.mu.shape[0]

    @property
    def n(self) -> int:
        return self.sigma.shape[1]

    def block_matrix(self) -> np.ndarray:
        """The symmetric (m+1) x (m+1) matrix [[sigma sigma^T, 1], [1^T, 0]]."""
        m = self.m
        out = np.zeros((m + 1, m + 1))
        out[:m, :m] = self.sigma @ self.sigma.T
        out[:m, m] = 1.0
        out[m, :m] = 1.0
        return out

    def to_text(self) -> str:
        """One row per asset: ``mu_j sigma_j1 ... sigma_jn``."""
        rows = np.column_stack([self.mu, self.sigma])
        return "\n".join(" ".join(repr(float(v)) for v in row) for row in rows) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "MarketCoefficients":
        rows = [line.split() for line in text.splitlines()
                if line.strip() and not line.lstrip().startswith("#")]
        if not rows:
            raise DimensionMismatch("empty market snapshot")
        widths = {len(r) for r in rows}
        if len(widths) != 1 or widths.pop() < 2:
            raise DimensionMismatch("every row needs mu followed by n >= 1 volatilities")
        data = np.array([[float(v) for v in r] for r in rows])
        return cls(mu=data[:, 0], sigma=data[:, 1:])


@dataclass(frozen=True)
class GopSolution:
    pi_star: np.ndarray
    lambda_star: float
    theta: np.ndarray
    residual: float


@dataclass(frozen=True)
class LrpSolution:
    pi_lrp: np.ndarray
    r: float


@dataclass(frozen=True)
class ExtensionInput:
    """New account with drift ``alpha`` and factor loadings ``beta`` (length n)."""

    alpha: float
    beta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "beta", np.atleast_1d(np.asarray(self.beta, dtype=float)))


class ExtensionCase(enum.Enum):
    REDUNDANT_DRIFT_MATCH = "RedundantDriftMatch"
    THREE_FUND = "ThreeFund"


@dataclass(frozen=True)
class ExtensionSolution:
    case_tag: ExtensionCase
    x_star: np.ndarray
    p_star: float
    lambda_2star: float
    theta_2star: np.ndarray
    pi_2star: np.ndarray = field(repr=False)


def _solve_block(coeffs: MarketCoefficients, rhs: np.ndarray, tol: float):
    """Minimum-norm least-squares solve of the block system.

    Returns the solution and a flag telling whether ``rhs`` lies in the image
    within ``tol * (1 + |rhs|)``.
    """
    mat = coeffs.block_matrix()
    sol, *_ = np.linalg.lstsq(mat, rhs, rcond=tol)
    resid = mat @ sol - rhs
    feasible = np.linalg.norm(resid) <= tol * (1.0 + np.linalg.norm(rhs))
    return sol, float(np.max(np.abs(resid))), feasible


def _check_weights(coeffs: MarketCoefficients, pi, tol: float = 1e-9) -> np.ndarray:
    pi = np.atleast_1d(np.asarray(pi, dtype=float))
    if pi.shape != (coeffs.m,):
        raise DimensionMismatch(f"weight vector must have length {coeffs.m}")
    if abs(pi.sum() - 1.0) > tol * max(1.0, np.abs(pi).sum()):
        raise DomainError(f"weights sum to {pi.sum()!r}, not 1")
    return pi


def solve_gop(coeffs: MarketCoefficients, tol: float = DEFAULT_TOL) -> GopSolution:
    """Growth optimal portfolio of the market snapshot.

    Solves ``M (pi; lambda) = (mu; 1)``.  When the system is rank deficient
    but consistent, the minimum-norm solution is returned (the GOP value
    process is unique even though its weights need not be).

    Raises:
        NoGop: ``(mu; 1)`` is not in the image of ``M``.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    m = coeffs.m
    rhs = np.append(coeffs.mu, 1.0)
    sol, resid, feasible = _solve_block(coeffs, rhs, tol)
    if not feasible:
        raise NoGop(f"(mu; 1) not in the image of M (residual {resid:.3e})")
    pi_star = sol[:m]
    theta = coeffs.sigma.T @ pi_star
    return GopSolution(pi_star=pi_star, lambda_star=float(sol[m]), theta=theta,
                       residual=resid)


def portfolio_sde(coeffs: MarketCoefficients, gop: GopSolution, pi,
                  tol: float = DEFAULT_TOL) -> tuple[float, np.ndarray]:
    """Drift and diffusion vector of a self-financing portfolio with weights ``pi``.

    The drift is written as ``lambda* + (pi^T sigma) theta``, which requires
    ``lambda* = pi^T mu - pi^T sigma theta``; that identity is checked first.
    """
    pi = _check_weights(coeffs, pi)
    diffusion = pi @ coeffs.sigma
    implied = float(pi @ coeffs.mu - diffusion @ gop.theta)
    scale = 1.0 + abs(gop.lambda_star) + float(np.abs(pi).sum())
    if abs(implied - gop.lambda_star) > tol * scale:
        raise InconsistentMarket(
            f"pi^T mu - pi^T sigma theta = {implied!r} but lambda* = {gop.lambda_star!r}")
    drift = gop.lambda_star + float(diffusion @ gop.theta)
    return drift, diffusion


def benchmarked_volatility(coeffs: MarketCoefficients, gop: GopSolution, pi) -> np.ndarray:
    """Volatility of the portfolio denominated in the GOP; its drift is zero."""
    pi = _check_weights(coeffs, pi)
    return pi @ coeffs.sigma - gop.theta


def instantaneous_growth_rate(coeffs: MarketCoefficients, pi) -> float:
    pi = _check_weights(coeffs, pi)
    vol = pi @ coeffs.sigma
    return float(pi @ coeffs.mu - 0.5 * vol @ vol)


def solve_lrp(coeffs: MarketCoefficients, tol: float = DEFAULT_TOL) -> LrpSolution:
    """Locally risk-free portfolio: a zero-volatility combination of the accounts.

    The kernel of ``sigma^T`` is taken from the SVD with threshold
    ``tol * largest singular value``; the kernel vector with the largest
    overlap with the ones vector (the projection of 1 onto the kernel)
    is normalized to sum to one.
    """
    m = coeffs.m
    _, svals, vt = np.linalg.svd(coeffs.sigma.T, full_matrices=True)
    smax = svals[0] if svals.size else 0.0
    rank = int(np.sum(svals > tol * smax)) if smax > 0 else 0
    basis = vt[rank:].T  # m x (m - rank)
    if basis.shape[1] == 0:
        raise NoLrp("sigma^T has a trivial kernel")
    overlap = basis.T @ np.ones(m)
    if np.linalg.norm(overlap) <= tol * np.sqrt(m):
        raise NoLrp("kernel of sigma^T is orthogonal to the ones vector")
    k = basis @ overlap
    pi_lrp = k / k.sum()
    return LrpSolution(pi_lrp=pi_lrp, r=float(pi_lrp @ coeffs.mu))


def extend_market(coeffs: MarketCoefficients, gop: GopSolution, ext: ExtensionInput,
                  tol: float = DEFAULT_TOL) -> ExtensionSolution:
    """GOP of the market extended by one account (three-fund separation).

    ``p*`` solves ``p* |beta - sigma^T x*|^2 = alpha - lambda* - beta^T theta``,
    the sign under which a drift-matching account gets zero weight.
    """
    m, n = coeffs.m, coeffs.n
    beta = ext.beta
    if beta.shape != (n,):
        raise DimensionMismatch(f"beta must have length {n}")
    excess = float(ext.alpha - gop.lambda_star - beta @ gop.theta)
    if abs(excess) <= tol * (1.0 + abs(ext.alpha)):
        return ExtensionSolution(
            case_tag=ExtensionCase.REDUNDANT_DRIFT_MATCH,
            x_star=np.zeros(m),
            p_star=0.0,
            lambda_2star=gop.lambda_star,
            theta_2star=gop.theta.copy(),
            pi_2star=np.append(gop.pi_star, 0.0),
        )

    rhs = np.append(coeffs.sigma @ beta, 1.0)
    sol, resid, feasible = _solve_block(coeffs, rhs, tol)
    if not feasible:
        raise NoExtendedGop(
            f"drift mismatch {excess:.3e} and (sigma beta; 1) not in im(M) "
            f"(residual {resid:.3e})")
    x_star = sol[:m]
    gap = beta - coeffs.sigma.T @ x_star
    gap2 = float(gap @ gap)
    if gap2 <= tol:
        raise Degenerate("new account is replicable but its drift does not match")
    p_star = excess / gap2
    lambda_2star = gop.lambda_star - p_star * float(gap @ (coeffs.sigma.T @ x_star))
    theta_2star = gop.theta + p_star * gap
    pi_2star = np.append(gop.pi_star - p_star * x_star, p_star)
    return ExtensionSolution(
        case_tag=ExtensionCase.THREE_FUND,
        x_star=x_star,
        p_star=p_star,
        lambda_2star=lambda_2star,
        theta_2star=theta_2star,
        pi_2star=pi_2star,
    )
