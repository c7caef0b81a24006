"""Reference computations written independently of the library.

None of these import from ``urq``: they re-derive each quantity from its
definition (piecewise laws, numerical quadrature, arbitrary precision) so the
tests compare two separate implementations.
"""
import math

import mpmath
import numpy as np
from scipy import integrate

mpmath.mp.dps = 40


def q_symbol(v, bits=1):
    """ceil(v) mod 2**bits with plain Python integers."""
    return math.ceil(v) % (2**bits)


def triangle(l, delta, bits=1):
    """Piecewise consistency law given the projected distance l."""
    period = 2**bits * delta
    i = math.floor(l / period)
    r = l - i * period
    if r <= delta:
        return 1.0 - r / delta
    if r >= period - delta:
        return (r - (period - delta)) / delta
    return 0.0


def half_normal_pdf(l, scale):
    z = l / scale
    return math.sqrt(2.0 / math.pi) / scale * math.exp(-0.5 * z * z)


def quad_consistency(d, sigma, delta, bits=1):
    """Integral of triangle(l) * f(l | d) over l >= 0, split at every kink and every sigma*d."""
    if d == 0:
        return 1.0
    s = sigma * d
    top = 12.0 * s
    knots = np.arange(0.0, top + delta, delta) if top > delta else np.array([0.0, delta])
    knots = np.unique(np.concatenate([knots[knots <= top + delta], s * np.arange(13)]))
    total = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        val, _ = integrate.quad(lambda l: triangle(l, delta, bits) * half_normal_pdf(l, s),
                                a, b, epsabs=1e-15, epsrel=1e-13, limit=200)
        total += val
    return total


def mp_series(d, sigma, delta):
    """The binary-quantizer consistency series in 40-digit arithmetic (needs sigma d / delta >~ 1e-3)."""
    d, sigma, delta = mpmath.mpf(d), mpmath.mpf(sigma), mpmath.mpf(delta)
    a = mpmath.pi * sigma * d / (mpmath.sqrt(2) * delta)
    terms = int(10 / a) + 50
    total = mpmath.mpf(1) / 2
    for i in range(terms):
        total += mpmath.exp(-(a * (2 * i + 1)) ** 2) / (mpmath.pi * (i + mpmath.mpf(1) / 2)) ** 2
    return total


def chi_tail(K, sigma, c):
    """P(||phi|| >= c), phi ~ N(0, sigma^2 I_K), via the regularized upper gamma in mpmath."""
    return float(mpmath.gammainc(mpmath.mpf(K) / 2, mpmath.mpf(c) ** 2 / (2 * mpmath.mpf(sigma) ** 2),
                                 mpmath.inf, regularized=True))


def mp_log_failure(K, d, M, c_o, c_r):
    K, d, c_o, c_r = (mpmath.mpf(v) for v in (K, d, c_o, c_r))
    return 2 * K * mpmath.log(c_o * mpmath.sqrt(K) / d) - M * mpmath.log(1 / c_r)


def mp_corollary(K, M, P0, c_o, c_r):
    K, P0, c_o, c_r = (mpmath.mpf(v) for v in (K, P0, c_o, c_r))
    return c_o * mpmath.sqrt(K) * P0 ** (-1 / (2 * K)) * c_r ** (M / (2 * K))


def log_binom(n, k):
    return float(mpmath.log(mpmath.binomial(n, k)))


def dot_measure(phi, dither, x):
    """y_m = sum_k phi[m, k] x[k] + w_m with Python floats, one row at a time."""
    return [math.fsum(float(p) * float(v) for p, v in zip(row, x)) + float(w) for row, w in zip(phi, dither)]
