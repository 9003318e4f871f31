"""Path generation and Monte Carlo estimators.

* exact transitions under the benchmark-neutral measure (scaled non-central
  chi-square with four degrees of freedom);
* Euler paths of ``X = sqrt(S)`` under the real-world measure, carrying the
  log Radon-Nikodym density of the benchmark-neutral measure;
* long-run growth comparisons for constant-coefficient markets.

Random streams are derived from ``(seed, domain, index)`` through
:class:`numpy.random.SeedSequence`, so every path (Euler) or batch (exact
sampling) owns a substream and results do not depend on execution order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from bnpricing import kernels
from bnpricing.errors import DomainError, StepTooLarge
from bnpricing.market import MarketCoefficients, solve_gop
from bnpricing.mmm import MmmParams, PutContract, phi
from bnpricing.special import chi2_4_from_normals

DEFAULT_DT = 1.0 / 2520.0
X_FLOOR = 1e-8
MAX_FLOOR_FRACTION = 1e-3
BATCH_SIZE = 1 << 16

# substream domains
EXACT, EULER, GROWTH, PATH = 0, 1, 2, 3


def substream(seed: int, domain: int, index: int) -> np.random.PCG64:
    return np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(domain, int(index))))


def make_rng(seed: int, domain: int = PATH, index: int = 0) -> np.random.Generator:
    return np.random.Generator(substream(seed, domain, index))


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 10_000
    seed: int = 42
    dt: float = DEFAULT_DT
    antithetic: bool = False

    def __post_init__(self):
        if int(self.n_paths) < 1:
            raise DomainError("n_paths must be >= 1")
        if not self.dt > 0:
            raise DomainError("dt must be positive")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise DomainError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float
    n_paths: int

    def within(self, target: float, n_se: float = 3.0) -> bool:
        return abs(self.value - target) <= n_se * self.stderr


@dataclass(frozen=True)
class RadonNikodymState:
    """Running ``log Lambda`` of the benchmark-neutral measure along each path."""

    log_lambda: np.ndarray

    @property
    def value(self) -> np.ndarray:
        return np.exp(self.log_lambda)


@dataclass(frozen=True)
class Path:
    times: np.ndarray
    levels: np.ndarray


@dataclass(frozen=True)
class RealWorldPaths:
    """Euler output: ``levels`` and ``density`` are (n_paths, len(times))."""

    times: np.ndarray
    levels: np.ndarray
    density: RadonNikodymState
    floor_hits: int
    n_steps: int


def _estimate(samples: np.ndarray) -> McEstimate:
    n = samples.size
    mean = float(samples.mean())
    se = float(samples.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return McEstimate(mean, se, n)


# ---------------------------------------------------------------- exact Q law

def sample_sstar_q(params: MmmParams, t: float, s, T: float, rng: np.random.Generator,
                   size=None):
    """Exact draw of the index at ``T`` given level ``s`` at ``t`` under the
    benchmark-neutral measure."""
    if not t < T:
        raise DomainError("need t < T")
    s = np.asarray(s, dtype=float)
    if np.any(~(s > 0)):
        raise DomainError("index level must be positive")
    c = phi(params, T) - phi(params, t)
    shape = s.shape if size is None else np.broadcast_shapes(
        s.shape, (size,) if np.isscalar(size) else tuple(size))
    z = rng.standard_normal((4,) + shape)
    out = c * chi2_4_from_normals(z, s / c)
    return float(out) if out.ndim == 0 else out


def simulate_q_path(params: MmmParams, times, s0: float, rng: np.random.Generator) -> Path:
    """Chain of exact transitions over an increasing time grid."""
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) <= 0) or times[0] < 0:
        raise DomainError("times must be nonnegative and strictly increasing")
    dphi = np.diff(phi(params, times))
    z = rng.standard_normal((len(dphi), 4))
    levels = np.empty(times.size)
    levels[0] = s = float(s0)
    for i, c in enumerate(dphi):
        zi = z[i]
        s = c * ((zi[0] + math.sqrt(s / c)) ** 2 + zi[1] ** 2 + zi[2] ** 2 + zi[3] ** 2)
        levels[i + 1] = s
    return Path(times, levels)


def mc_fair_price(params: MmmParams, contract: PutContract, t: float, s: float,
                  config: SimConfig) -> McEstimate:
    """Monte Carlo benchmark-neutral put price ``s E[max(0, K - S_T) / S_T]``."""
    T, K = contract.maturity, contract.strike
    if not 0 <= t < T:
        raise DomainError("need 0 <= t < T")
    if not s > 0:
        raise DomainError("index level must be positive")
    n = int(config.n_paths)
    if K == 0:
        return McEstimate(0.0, 0.0, n)
    c = phi(params, T) - phi(params, t)
    lam = s / c

    n_units = (n + 1) // 2 if config.antithetic else n
    total = 0.0
    total_sq = 0.0
    done = 0
    for b, start in enumerate(range(0, n_units, BATCH_SIZE)):
        m = min(BATCH_SIZE, n_units - start)
        rng = np.random.Generator(substream(config.seed, EXACT, b))
        z = rng.standard_normal((4, m))
        st = c * chi2_4_from_normals(z, lam)
        vals = s * np.maximum(0.0, K - st) / st
        if config.antithetic:
            st = c * chi2_4_from_normals(-z, lam)
            vals = 0.5 * (vals + s * np.maximum(0.0, K - st) / st)
        total += float(vals.sum())
        total_sq += float(vals @ vals)
        done += m
    mean = total / done
    var = max(total_sq / done - mean * mean, 0.0) * done / max(done - 1, 1)
    paths = 2 * done if config.antithetic else done
    return McEstimate(mean, math.sqrt(var / done), paths)


# ------------------------------------------------------------ real-world Euler

def _euler_coefficients(params: MmmParams, grid: np.ndarray):
    dt = np.diff(grid)
    ph = np.exp(params.tau0_bar + params.a_bar * grid[:-1])
    a = params.a_bar
    return dict(
        dt=np.ascontiguousarray(dt),
        sqdt=np.sqrt(dt),
        vol=np.sqrt(ph * a),
        c3=1.5 * ph * a,
        sig_coef=params.lambda_bar * np.sqrt(a / (4.0 * ph)),
        half_drift=0.5 * params.lambda_bar * a,
    )


def run_euler(params: MmmParams, grid, s0: float, n_paths: int, seed: int,
              record_idx=None, backend: str | None = None) -> RealWorldPaths:
    """Euler paths of ``sqrt(S)`` under the real-world measure on ``grid``.

    ``record_idx`` selects grid indices to keep (default: start and end).

    Raises:
        StepTooLarge: more than 0.1% of all steps hit the positivity floor.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise DomainError("grid must be strictly increasing with at least two points")
    if not s0 > 0:
        raise DomainError("s0 must be positive")
    n_steps = grid.size - 1
    if record_idx is None:
        record_idx = [0, n_steps]
    record_idx = np.ascontiguousarray(np.asarray(record_idx, dtype=np.int64))
    if np.any(np.diff(record_idx) < 0) or record_idx[0] < 0 or record_idx[-1] > n_steps:
        raise DomainError("record_idx must be sorted grid indices")
    coef = _euler_coefficients(params, grid)
    bitgens = [substream(seed, EULER, p) for p in range(int(n_paths))]
    kern = kernels.get_backend(backend)
    x_rec, ll_rec, hits = kern.euler_sqrt_paths(
        math.sqrt(s0), coef["dt"], coef["sqdt"], coef["vol"], coef["c3"],
        coef["sig_coef"], coef["half_drift"], bitgens, record_idx, X_FLOOR)
    floor_hits = int(hits.sum())
    if floor_hits > MAX_FLOOR_FRACTION * n_steps * n_paths:
        raise StepTooLarge(f"{floor_hits} of {n_steps * n_paths} steps hit the floor")
    return RealWorldPaths(times=grid[record_idx], levels=x_rec * x_rec,
                          density=RadonNikodymState(ll_rec), floor_hits=floor_hits,
                          n_steps=n_steps)


def uniform_grid(t0: float, horizon: float, dt: float) -> np.ndarray:
    n_steps = max(1, math.ceil(horizon / dt - 1e-9))
    return t0 + np.linspace(0.0, horizon, n_steps + 1)


def simulate_p_path(params: MmmParams, t0: float, s0: float, horizon: float,
                    config: SimConfig) -> Path:
    """One real-world Euler path (stream of path index 0), every step recorded."""
    if horizon < 0:
        raise DomainError("horizon must be nonnegative")
    if horizon == 0:
        return Path(np.array([float(t0)]), np.array([float(s0)]))
    grid = uniform_grid(t0, horizon, config.dt)
    out = run_euler(params, grid, s0, 1, config.seed, record_idx=np.arange(grid.size))
    return Path(out.times, out.levels[0])


def check_lambda_martingale(params: MmmParams, T: float, config: SimConfig,
                            backend: str | None = None) -> McEstimate:
    """Mean of the benchmark-neutral density at ``T`` over real-world paths (should be 1)."""
    grid = uniform_grid(0.0, T, config.dt)
    out = run_euler(params, grid, params.s0, config.n_paths, config.seed, backend=backend)
    return _estimate(out.density.value[:, -1])


def mc_fair_price_p(params: MmmParams, contract: PutContract, config: SimConfig,
                    backend: str | None = None) -> McEstimate:
    """Put price at 0 from real-world paths, payoff weighted by the density.

    Bayes' rule turns ``s0 E^Q[H/S_T]`` into ``s0 E^P[Lambda_T H/S_T]``.
    """
    grid = uniform_grid(0.0, contract.maturity, config.dt)
    out = run_euler(params, grid, params.s0, config.n_paths, config.seed, backend=backend)
    s_T = out.levels[:, -1]
    vals = out.density.value[:, -1] * params.s0 * contract.payoff(s_T) / s_T
    return _estimate(vals)


# -------------------------------------------------------------- growth rates

def empirical_growth_rate(times, levels) -> float:
    """``ln(S_T / S_0) / T`` over the span of the path."""
    times = np.asarray(times, dtype=float)
    levels = np.asarray(levels, dtype=float)
    if times.size < 2 or levels.size != times.size:
        raise DomainError("path needs at least two aligned points")
    span = times[-1] - times[0]
    if not span > 0 or levels[0] <= 0 or levels[-1] <= 0:
        raise DomainError("need a positive time span and positive levels")
    return float(math.log(levels[-1] / levels[0]) / span)


def constant_mix_log_values(coeffs: MarketCoefficients, weights, horizon: float,
                            dt: float, rng: np.random.Generator):
    """Log values of continuously rebalanced portfolios driven by one shared
    Brownian path; returns (times, array of shape (len(weights), steps + 1))."""
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    grid = uniform_grid(0.0, horizon, dt)
    steps = np.diff(grid)
    dw = rng.standard_normal((steps.size, coeffs.n)) * np.sqrt(steps)[:, None]
    vol = weights @ coeffs.sigma                         # (k, n)
    growth = weights @ coeffs.mu - 0.5 * np.sum(vol * vol, axis=1)
    incr = growth[:, None] * steps[None, :] + vol @ dw.T
    logs = np.concatenate([np.zeros((weights.shape[0], 1)), np.cumsum(incr, axis=1)], axis=1)
    return grid, logs


def growth_race(coeffs: MarketCoefficients, pi_alt, horizon: float = 200.0,
                n_seeds: int = 200, seed: int = 42, dt: float = 1.0 / 12.0) -> float:
    """Fraction of seeds in which the GOP's realized growth rate is at least
    that of the constant-mix portfolio ``pi_alt`` on the same Brownian path."""
    gop = solve_gop(coeffs)
    weights = np.vstack([gop.pi_star, np.asarray(pi_alt, dtype=float)])
    wins = 0
    for k in range(n_seeds):
        times, logs = constant_mix_log_values(coeffs, weights, horizon, dt,
                                              make_rng(seed, GROWTH, k))
        g = [empirical_growth_rate(times, np.exp(row)) for row in logs]
        wins += g[0] >= g[1]
    return wins / n_seeds
