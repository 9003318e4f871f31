"""Special functions behind the minimal-market-model put formula.

The non-central chi-square CDF is evaluated by the Poisson-weighted
incomplete-gamma series, summed outward from the central Poisson index, with
the point mass at zero for zero degrees of freedom.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from bnpricing import kernels
from bnpricing.errors import DomainError

I1_SERIES_MAX = 15.0


@dataclass(frozen=True)
class NoncentralChi2Params:
    delta: float
    lam: float

    def __post_init__(self):
        if not (math.isfinite(self.delta) and math.isfinite(self.lam)):
            raise DomainError("non-central chi-square parameters must be finite")
        if self.delta < 0 or self.lam < 0:
            raise DomainError("degrees of freedom and non-centrality must be >= 0")


def gamma_fn(p: float) -> float:
    """Gamma function on (0, 170]; use :func:`math.lgamma` beyond that."""
    if not p > 0:
        raise DomainError(f"gamma_fn needs p > 0, got {p!r}")
    if p > 170.0:
        raise OverflowError(f"gamma({p}) overflows double precision; use lgamma")
    return math.gamma(p)


def regularized_lower_gamma(u: float, p: float) -> float:
    """P(p, u) = gamma_lower(u; p) / Gamma(p)."""
    if not p > 0 or u < 0:
        raise DomainError("regularized incomplete gamma needs p > 0 and u >= 0")
    return kernels.active.reg_gamma_p(float(p), float(u))


def regularized_upper_gamma(u: float, p: float) -> float:
    """Q(p, u) = Gamma(u; p) / Gamma(p)."""
    if not p > 0 or u < 0:
        raise DomainError("regularized incomplete gamma needs p > 0 and u >= 0")
    return kernels.active.reg_gamma_q(float(p), float(u))


def upper_incomplete_gamma(u: float, p: float) -> float:
    """Gamma(u; p) = integral of t^(p-1) e^-t over [u, inf).

    Only p > 0 is supported; the mixture series never needs more.
    """
    if not p > 0:
        raise DomainError(f"upper_incomplete_gamma supports p > 0, got {p!r}")
    if u < 0:
        raise DomainError(f"upper_incomplete_gamma needs u >= 0, got {u!r}")
    if u == 0:
        return math.exp(math.lgamma(p)) if p > 170.0 else math.gamma(p)
    q = kernels.active.reg_gamma_q(float(p), float(u))
    if q <= 0.0:
        return 0.0
    return math.exp(math.lgamma(p) + math.log(q))


def _i1_series(z: float) -> float:
    half = 0.5 * z
    term = half
    total = term
    q = half * half
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + 1))
        total += term
        if term < total * 1e-17:
            return total


def _i1_scaled_asymptotic(z: float) -> float:
    """e^-z sqrt(2 pi z) I_1(z) by the large-argument expansion."""
    total = 1.0
    term = 1.0
    k = 0
    prev = math.inf
    while True:
        k += 1
        odd = 2 * k - 1
        term *= -(4.0 - odd * odd) / (k * 8.0 * z)
        if abs(term) >= prev or abs(term) < 1e-17:
            break
        total += term
        prev = abs(term)
    return total


def log_bessel_i1(z: float) -> float:
    """log I_1(z) for z >= 0, finite for arguments far beyond exp overflow."""
    if z < 0:
        raise DomainError("bessel_i1 is defined here for z >= 0")
    if z == 0:
        return -math.inf
    if z <= I1_SERIES_MAX:
        return math.log(_i1_series(z))
    return z - 0.5 * math.log(2.0 * math.pi * z) + math.log(_i1_scaled_asymptotic(z))


def bessel_i1(z: float) -> float:
    """Modified Bessel function of the first kind of order one."""
    if z < 0:
        raise DomainError("bessel_i1 is defined here for z >= 0")
    if z == 0:
        return 0.0
    if z <= I1_SERIES_MAX:
        return _i1_series(z)
    return math.exp(log_bessel_i1(z))


def noncentral_chi2_cdf(x, delta, lam):
    """P(chi2_delta(lam) <= x), vectorized over broadcastable inputs.

    For ``delta == 0`` the distribution has an atom ``exp(-lam/2)`` at zero,
    which is included for every ``x >= 0``.
    """
    x, delta, lam = np.broadcast_arrays(np.asarray(x, dtype=float),
                                        np.asarray(delta, dtype=float),
                                        np.asarray(lam, dtype=float))
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise DomainError("noncentral_chi2_cdf needs x >= 0")
    if np.any(delta < 0) or np.any(lam < 0) or not (
            np.isfinite(delta).all() and np.isfinite(lam).all()):
        raise DomainError("need finite delta >= 0 and lam >= 0")
    shape = x.shape
    out = kernels.active.ncx2_cdf(np.ascontiguousarray(x.ravel()),
                                  np.ascontiguousarray(delta.ravel()),
                                  np.ascontiguousarray(lam.ravel()))
    out = out.reshape(shape)
    return float(out) if out.ndim == 0 else out


def sbp4_transition_density(s_from, s_to, phi_from, phi_to):
    """Transition density of the dimension-four squared Bessel index in phi-time.

    ``phi`` is the exponential of the activity time; the law of ``s_to`` is
    ``c * chi2'_4(s_from / c)`` with ``c = phi_to - phi_from``.
    """
    c = phi_to - phi_from
    if not c > 0 or phi_from < 0:
        raise DomainError("time change must be strictly increasing")
    if s_from <= 0:
        raise DomainError("s_from must be positive")
    s_to = np.asarray(s_to, dtype=float)
    if np.any(s_to < 0):
        raise DomainError("s_to must be nonnegative")

    def one(y):
        if y == 0:
            return 0.0
        z = math.sqrt(s_from * y) / c
        logd = (-math.log(2.0 * c) + 0.5 * math.log(y / s_from)
                - (s_from + y) / (2.0 * c) + log_bessel_i1(z))
        return math.exp(logd)

    if s_to.ndim == 0:
        return one(float(s_to))
    return np.array([one(float(y)) for y in s_to.ravel()]).reshape(s_to.shape)


def sample_noncentral_chi2_4(lam, rng: np.random.Generator, size=None):
    """Exact draw(s) of chi2'_4(lam) as (Z1 + sqrt(lam))^2 + Z2^2 + Z3^2 + Z4^2."""
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(lam_arr < 0):
        raise DomainError("non-centrality must be >= 0")
    if size is None:
        size = ()
    elif np.isscalar(size):
        size = (int(size),)
    shape = np.broadcast_shapes(lam_arr.shape, tuple(size))
    z = rng.standard_normal((4,) + shape)
    out = (z[0] + np.sqrt(lam_arr)) ** 2 + z[1] ** 2 + z[2] ** 2 + z[3] ** 2
    return float(out) if out.ndim == 0 else out


def chi2_4_from_normals(z: np.ndarray, lam) -> np.ndarray:
    """Map a (4, ...) block of standard normals to chi2'_4(lam) draws."""
    return (z[0] + np.sqrt(lam)) ** 2 + z[1] ** 2 + z[2] ** 2 + z[3] ** 2
