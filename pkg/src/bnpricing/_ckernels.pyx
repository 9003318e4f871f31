# cython: language_level=3
"""Compiled kernels: incomplete gamma, the Poisson-mixture non-central
chi-square CDF, and the Euler stepper for the square-root index process.

``_pykernels.py`` holds the reference versions; keep the two in step.
"""
import numpy as np
cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport exp, log, lgamma, floor, fabs, INFINITY, NAN
from libc.stdlib cimport malloc, free
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_standard_normal

cnp.import_array()

NAME = "cython"

cdef double EPS = 1e-15
cdef double FPMIN = 1e-300
cdef long MAX_ITER = 1000000
cdef double LOG_TAIL = log(5e-15)


cdef double LOG_SQRT_2PI = 0.91893853320467274178


cdef double _stirlerr(double n) nogil:
    """log Gamma(n + 1) - (n + 1/2) log n + n - log sqrt(2 pi)."""
    cdef double nn
    if n <= 15.0:
        return lgamma(n + 1.0) - (n + 0.5) * log(n) + n - LOG_SQRT_2PI
    nn = 1.0 / (n * n)
    return (1.0 / 12 - (1.0 / 360 - (1.0 / 1260 - (1.0 / 1680 - nn / 1188) * nn) * nn) * nn) / n


cdef double _bd0(double x, double m) nogil:
    """x log(x / m) + m - x without cancellation when x is close to m."""
    cdef double v, s, s1, ej
    cdef int j
    if fabs(x - m) < 0.1 * (x + m):
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
    return x * log(x / m) + m - x


cdef double _log_dpois(double k, double m) nogil:
    """log(m^k e^-m / Gamma(k + 1)) for real k >= 0 and m > 0."""
    if k == 0.0:
        return -m
    return -_stirlerr(k) - _bd0(k, m) - 0.5 * log(k) - LOG_SQRT_2PI


cdef inline double _log_prefactor(double a, double u) nogil:
    # log(u^a e^-u / Gamma(a)) = log(a) + log_dpois(a, u)
    return log(a) + _log_dpois(a, u)


cdef double _gamma_series(double a, double u) nogil:
    cdef double ap = a
    cdef double term = 1.0 / a
    cdef double total = term
    cdef long n
    for n in range(MAX_ITER):
        ap += 1.0
        term *= u / ap
        total += term
        if fabs(term) < fabs(total) * EPS:
            return total * exp(_log_prefactor(a, u))
    return NAN


cdef double _gamma_cfrac(double a, double u) nogil:
    cdef double b = u + 1.0 - a
    cdef double c = 1.0 / FPMIN
    cdef double d = 1.0 / b
    cdef double h = d
    cdef double an, delta
    cdef long i
    for i in range(1, MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if fabs(d) < FPMIN:
            d = FPMIN
        c = b + an / c
        if fabs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < EPS:
            return exp(_log_prefactor(a, u)) * h
    return NAN


cdef double _reg_p(double a, double u) nogil:
    if u <= 0.0:
        return 0.0
    if u < a + 1.0:
        return _gamma_series(a, u)
    return 1.0 - _gamma_cfrac(a, u)


cdef double _reg_q(double a, double u) nogil:
    if u <= 0.0:
        return 1.0
    if u < a + 1.0:
        return 1.0 - _gamma_series(a, u)
    return _gamma_cfrac(a, u)


def reg_gamma_p(double a, double u):
    return _reg_p(a, u)


def reg_gamma_q(double a, double u):
    return _reg_q(a, u)


def log_poisson_pmf(double k, double m):
    return _log_dpois(k, m)


cdef double _ncx2_cdf(double x, double delta, double lam) nogil:
    cdef double h, u, logu, logh, kc, lwc, k, lw, r, k_hi, lw_hi, k_lo
    cdef double a, p, total, lt
    # halving can underflow subnormal inputs to zero
    h = 0.5 * lam
    u = 0.5 * x
    if u <= 0.0:
        if delta == 0.0:
            return exp(-h)
        return 0.0
    if h <= 0.0:
        if delta == 0.0:
            return 1.0
        return _reg_p(0.5 * delta, u)

    logu = log(u)
    logh = log(h)
    kc = floor(h)
    lwc = _log_dpois(kc, h)

    k = kc
    lw = lwc
    while True:
        r = h / (k + 1.0)
        if r < 1.0 and lw + log(r / (1.0 - r)) < LOG_TAIL:
            break
        lw += log(r)
        k += 1.0
    k_hi = k

    k = kc
    lw = lwc
    while k > 0.0:
        r = k / h
        if r < 1.0 and lw + log(r / (1.0 - r)) < LOG_TAIL:
            break
        lw += log(r)
        k -= 1.0
    k_lo = k

    # weights and gamma terms are re-anchored from the stable form, not carried
    # across the upward scan, so the downward walk starts without drift
    a = 0.5 * delta + k_hi
    lw = _log_dpois(k_hi, h)
    if a > 0.0:
        p = _reg_p(a, u)
        lt = _log_prefactor(a, u) - logu
    else:
        p = 1.0
        lt = -INFINITY
    total = exp(lw) * p
    k = k_hi
    while k > k_lo:
        p += exp(lt)
        a -= 1.0
        if a > 0.0:
            lt += log(a) - logu
        lw += log(k) - logh
        k -= 1.0
        total += exp(lw) * p
    if total < 0.0:
        return 0.0
    if total > 1.0:
        return 1.0
    return total


def ncx2_cdf_scalar(double x, double delta, double lam):
    return _ncx2_cdf(x, delta, lam)


def ncx2_cdf(const double[::1] x, const double[::1] delta, const double[::1] lam):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _ncx2_cdf(x[i], delta[i], lam[i])
    return out


def euler_sqrt_paths(double x0, const double[::1] dt, const double[::1] sqdt,
                     const double[::1] vol, const double[::1] c3,
                     const double[::1] sig_coef, double half_drift, bitgens,
                     const cnp.int64_t[::1] record_idx, double x_floor):
    """Euler scheme for X = sqrt(S) plus the log Radon-Nikodym density.

    See ``_pykernels.euler_sqrt_paths`` for the contract.
    """
    cdef Py_ssize_t n_paths = len(bitgens)
    cdef Py_ssize_t n_steps = dt.shape[0]
    cdef Py_ssize_t n_rec = record_idx.shape[0]
    x_rec_arr = np.empty((n_paths, n_rec))
    ll_rec_arr = np.empty((n_paths, n_rec))
    hits_arr = np.zeros(n_paths, dtype=np.int64)
    cdef double[:, ::1] x_rec = x_rec_arr
    cdef double[:, ::1] ll_rec = ll_rec_arr
    cdef cnp.int64_t[::1] hits = hits_arr

    cdef bitgen_t **rngs = <bitgen_t **> malloc(n_paths * sizeof(bitgen_t *))
    if rngs == NULL:
        raise MemoryError()
    cdef Py_ssize_t p, i, r
    cdef double x, ll, z, dw, sig
    cdef bitgen_t *rng
    try:
        for p in range(n_paths):
            rngs[p] = <bitgen_t *> PyCapsule_GetPointer(bitgens[p].capsule, "BitGenerator")
        with nogil:
            for p in range(n_paths):
                rng = rngs[p]
                x = x0
                ll = 0.0
                r = 0
                while r < n_rec and record_idx[r] == 0:
                    x_rec[p, r] = x
                    ll_rec[p, r] = ll
                    r += 1
                for i in range(n_steps):
                    z = random_standard_normal(rng)
                    dw = sqdt[i] * z
                    sig = sig_coef[i] * x
                    ll = ll + (-sig * dw - 0.5 * sig * sig * dt[i])
                    x = x + (half_drift * x + c3[i] / x) * dt[i] + vol[i] * dw
                    if x < x_floor:
                        x = x_floor
                        hits[p] += 1
                    while r < n_rec and record_idx[r] == i + 1:
                        x_rec[p, r] = x
                        ll_rec[p, r] = ll
                        r += 1
    finally:
        free(rngs)
    return x_rec_arr, ll_rec_arr, hits_arr
