"""Pure-Python reference versions of the compiled kernels in ``_ckernels.pyx``.

Every function here mirrors its Cython counterpart operation for operation,
so the two backends agree to rounding (the Euler stepper agrees bit for bit).
"""
import math

import numpy as np

EPS = 1e-15
FPMIN = 1e-300
MAX_ITER = 1_000_000
# neglected Poisson mass on each side of the series
LOG_TAIL = math.log(5e-15)

NAME = "python"


LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _stirlerr(n):
    """log Gamma(n + 1) - (n + 1/2) log n + n - log sqrt(2 pi)."""
    if n <= 15.0:
        return math.lgamma(n + 1.0) - (n + 0.5) * math.log(n) + n - LOG_SQRT_2PI
    nn = 1.0 / (n * n)
    return (1.0 / 12 - (1.0 / 360 - (1.0 / 1260 - (1.0 / 1680 - nn / 1188) * nn) * nn) * nn) / n


def _bd0(x, m):
    """x log(x / m) + m - x without cancellation when x is close to m."""
    if abs(x - m) < 0.1 * (x + m):
        v = (x - m) / (x + m)
        s = (x - m) * v
        ej = 2.0 * x * v
        v = v * v
        for j in range(1, 1000):
            ej *= v
            s1 = s + ej / (2 * j + 1)
            if s1 == s:
                return s1
            s = s1
        return s
    return x * math.log(x / m) + m - x


def log_poisson_pmf(k, m):
    """log(m^k e^-m / Gamma(k + 1)) for real k >= 0 and m > 0."""
    if k == 0.0:
        return -m
    return -_stirlerr(k) - _bd0(k, m) - 0.5 * math.log(k) - LOG_SQRT_2PI


def _log_prefactor(a, u):
    # log(u^a e^-u / Gamma(a)) = log(a) + log_poisson_pmf(a, u)
    return math.log(a) + log_poisson_pmf(a, u)


def _gamma_series(a, u):
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(MAX_ITER):
        ap += 1.0
        term *= u / ap
        total += term
        if abs(term) < abs(total) * EPS:
            return total * math.exp(_log_prefactor(a, u))
    return math.nan


def _gamma_cfrac(a, u):
    # modified Lentz evaluation of the continued fraction for Q(a, u)
    b = u + 1.0 - a
    c = 1.0 / FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < FPMIN:
            d = FPMIN
        c = b + an / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return math.exp(_log_prefactor(a, u)) * h
    return math.nan


def reg_gamma_p(a, u):
    """Regularized lower incomplete gamma P(a, u) for a > 0, u >= 0."""
    if u <= 0.0:
        return 0.0
    if u < a + 1.0:
        return _gamma_series(a, u)
    return 1.0 - _gamma_cfrac(a, u)


def reg_gamma_q(a, u):
    """Regularized upper incomplete gamma Q(a, u) for a > 0, u >= 0."""
    if u <= 0.0:
        return 1.0
    if u < a + 1.0:
        return 1.0 - _gamma_series(a, u)
    return _gamma_cfrac(a, u)


def _poisson_window(h):
    """Index range [k_lo, k_hi] of Poisson(h) weights carrying all but ~1e-14 mass."""
    kc = math.floor(h)
    lwc = log_poisson_pmf(kc, h)

    k, lw = kc, lwc
    while True:
        r = h / (k + 1.0)
        if r < 1.0 and lw + math.log(r / (1.0 - r)) < LOG_TAIL:
            break
        lw += math.log(r)
        k += 1
    k_hi = k

    k, lw = kc, lwc
    while k > 0:
        r = k / h
        if r < 1.0 and lw + math.log(r / (1.0 - r)) < LOG_TAIL:
            break
        lw += math.log(r)
        k -= 1
    return k, k_hi


def ncx2_cdf_scalar(x, delta, lam):
    # halving can underflow subnormal inputs to zero
    h = 0.5 * lam
    u = 0.5 * x
    if u <= 0.0:
        return math.exp(-h) if delta == 0.0 else 0.0
    if h <= 0.0:
        return 1.0 if delta == 0.0 else reg_gamma_p(0.5 * delta, u)

    logu = math.log(u)
    logh = math.log(h)
    k_lo, k_hi = _poisson_window(h)

    # weights and gamma terms are re-anchored from the stable form, not carried
    # across the upward scan, so the downward walk starts without drift
    a = 0.5 * delta + k_hi
    lw = log_poisson_pmf(k_hi, h)
    p = reg_gamma_p(a, u) if a > 0.0 else 1.0
    total = math.exp(lw) * p
    # P(a-1, u) = P(a, u) + u^(a-1) e^-u / Gamma(a), walked downward
    lt = _log_prefactor(a, u) - logu if a > 0.0 else -math.inf
    k = k_hi
    while k > k_lo:
        p += math.exp(lt)
        a -= 1.0
        if a > 0.0:
            lt += math.log(a) - logu
        lw += math.log(k) - logh
        k -= 1
        total += math.exp(lw) * p
    return min(max(total, 0.0), 1.0)


def ncx2_cdf(x, delta, lam):
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        out[i] = ncx2_cdf_scalar(float(x[i]), float(delta[i]), float(lam[i]))
    return out


def euler_sqrt_paths(x0, dt, sqdt, vol, c3, sig_coef, half_drift, bitgens,
                     record_idx, x_floor, path_chunk=1024, time_block=2048):
    """Euler scheme for X = sqrt(S) with the log Radon-Nikodym density alongside.

    Step ``i`` uses the precomputed grid coefficients ``dt[i]``, ``sqdt[i]``,
    ``vol[i]``, ``c3[i]``, ``sig_coef[i]``; each path draws its normals from its
    own bit generator in ``bitgens``.  Values are recorded at the grid indices
    in ``record_idx`` (0 is the start, ``len(dt)`` the end).
    """
    n_paths = len(bitgens)
    n_steps = dt.shape[0]
    n_rec = record_idx.shape[0]
    x_rec = np.empty((n_paths, n_rec))
    ll_rec = np.empty((n_paths, n_rec))
    hits = np.zeros(n_paths, dtype=np.int64)

    for p0 in range(0, n_paths, path_chunk):
        gens = [np.random.Generator(bg) for bg in bitgens[p0:p0 + path_chunk]]
        m = len(gens)
        x = np.full(m, float(x0))
        ll = np.zeros(m)
        chunk_hits = np.zeros(m, dtype=np.int64)
        r = 0
        while r < n_rec and record_idx[r] == 0:
            x_rec[p0:p0 + m, r] = x
            ll_rec[p0:p0 + m, r] = ll
            r += 1
        for b0 in range(0, n_steps, time_block):
            b1 = min(b0 + time_block, n_steps)
            z = np.empty((m, b1 - b0))
            for j, g in enumerate(gens):
                z[j] = g.standard_normal(b1 - b0)
            for i in range(b0, b1):
                dw = sqdt[i] * z[:, i - b0]
                sig = sig_coef[i] * x
                ll = ll + (-sig * dw - 0.5 * sig * sig * dt[i])
                x = x + (half_drift * x + c3[i] / x) * dt[i] + vol[i] * dw
                low = x < x_floor
                if low.any():
                    x[low] = x_floor
                    chunk_hits += low
                while r < n_rec and record_idx[r] == i + 1:
                    x_rec[p0:p0 + m, r] = x
                    ll_rec[p0:p0 + m, r] = ll
                    r += 1
        hits[p0:p0 + m] = chunk_hits
    return x_rec, ll_rec, hits
