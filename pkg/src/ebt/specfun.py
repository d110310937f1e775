"""Exponential integral and exponential order statistics.

The E1 kernels are written against a tiny arithmetic context so the same
code runs in IEEE doubles and in mpmath's arbitrary precision. The
extended-precision path is what keeps the alternating closed-form rate
sum in :mod:`ebt.rate_model` accurate.
"""

import math

import numpy as np

from .errors import DomainError

EULER_GAMMA = 0.57721566490153286061

# Below this the power series is used, at or above it the continued fraction.
E1_SERIES_CUTOFF = 1.5

HARMONIC_DIRECT_MAX = 10_000
ORDER_STAT_W_MAX = 10_000


class _FloatContext:
    exp = staticmethod(math.exp)
    log = staticmethod(math.log)
    euler = EULER_GAMMA
    eps = 2.0 ** -53
    tiny = 1e-300

    @staticmethod
    def convert(x):
        return float(x)


class _MpContext:
    def __init__(self, mp):
        self.mp = mp
        self.exp = mp.exp
        self.log = mp.log
        self.euler = +mp.euler
        self.eps = mp.eps
        self.tiny = mp.mpf(2) ** (-mp.prec * 4)

    def convert(self, x):
        return self.mp.mpf(x)


FLOAT = _FloatContext()


def mp_context(mp):
    """Wrap an mpmath context (``mpmath.mp`` at the caller's precision)."""
    return _MpContext(mp)


def _e1_series(x, ctx):
    # E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
    total = 0 * x
    term = -1 + 0 * x  # (-x)^0 / 0! with the leading minus folded in
    k = 0
    while True:
        k += 1
        term = -term * x / k
        contrib = term / k
        total += contrib
        if abs(contrib) <= ctx.eps * abs(total):
            break
    return -ctx.euler - ctx.log(x) + total


def _e1_scaled_cf(x, ctx):
    # modified Lentz for e^x E1(x) = 1/(x+1- 1/(x+3- 4/(x+5- ...)))
    b = x + 1
    c = 1 / ctx.tiny
    d = 1 / b
    h = d
    i = 0
    while True:
        i += 1
        an = -i * i
        b += 2
        d = 1 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1) <= ctx.eps:
            return h
        if i > 100_000:
            raise ArithmeticError(f"E1 continued fraction stalled at x={x}")


def _check_e1_arg(x):
    xf = float(x)
    if not math.isfinite(xf) or xf <= 0:
        raise DomainError(f"E1 requires a finite positive argument, got {x!r}")


def e1_generic(x, ctx=FLOAT):
    """E1(x) evaluated in the arithmetic of ``ctx``."""
    _check_e1_arg(x)
    x = ctx.convert(x)
    if x < E1_SERIES_CUTOFF:
        return _e1_series(x, ctx)
    return _e1_scaled_cf(x, ctx) * ctx.exp(-x)


def e1_scaled_generic(x, ctx=FLOAT):
    """``exp(x) * E1(x)`` without forming the (possibly tiny) E1 value."""
    _check_e1_arg(x)
    x = ctx.convert(x)
    if x < E1_SERIES_CUTOFF:
        return ctx.exp(x) * _e1_series(x, ctx)
    return _e1_scaled_cf(x, ctx)


def exp_integral_e1(x):
    """Exponential integral of order one, ``int_1^inf exp(-x t) / t dt``.

    Parameters
    ----------
    x : float
        Positive, finite argument.

    Returns
    -------
    float
        E1(x), relative error below 1e-12.
    """
    return e1_generic(x)


def exp_integral_e1_scaled(x):
    """``exp(x) * E1(x)``; finite for large ``x`` where E1 alone underflows."""
    return e1_scaled_generic(x)


def _check_order_index(w, W):
    if int(W) != W or W < 1:
        raise DomainError(f"sample size W must be a positive integer, got {W!r}")
    if int(w) != w or w < 1 or w > W:
        raise DomainError(f"order index w must lie in 1..{W}, got {w!r}")


def log_order_stat_coeff(w, W):
    """log of W! / ((w-1)! (W-w)!)."""
    return math.lgamma(W + 1) - math.lgamma(w) - math.lgamma(W - w + 1)


def order_stat_pdf(w, W, x):
    """Density of the w-th smallest of W iid unit-mean exponentials.

    Accepts scalar or array ``x``; the factorial prefactor is handled in
    log space so large ``W`` does not overflow.
    """
    _check_order_index(w, W)
    if np.ndim(x) == 0:
        x = float(x)
        if x < 0:
            raise DomainError("order_stat_pdf requires x >= 0")
        logp = log_order_stat_coeff(w, W) - (W - w + 1) * x
        if w > 1:
            if x == 0.0:
                return 0.0
            logp += (w - 1) * math.log(-math.expm1(-x))
        return math.exp(logp)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise DomainError("order_stat_pdf requires x >= 0")
    with np.errstate(divide="ignore"):
        logp = log_order_stat_coeff(w, W) - (W - w + 1) * xa
        if w > 1:
            logp = logp + (w - 1) * np.log(-np.expm1(-xa))
    return np.exp(logp)


def harmonic_number(n):
    """H_n = 1 + 1/2 + ... + 1/n, with H_0 = 0."""
    if int(n) != n or n < 0:
        raise DomainError(f"harmonic number needs a nonnegative integer, got {n!r}")
    n = int(n)
    if n <= HARMONIC_DIRECT_MAX:
        return math.fsum(1.0 / k for k in range(1, n + 1))
    inv2 = 1.0 / (n * n)
    return (math.log(n) + EULER_GAMMA + 0.5 / n
            - inv2 / 12 + inv2 * inv2 / 120 - inv2 ** 3 / 252)


def order_stat_mean(w, W, mean_snr):
    """Mean of the w-th smallest of W iid exponentials with mean ``mean_snr``."""
    _check_order_index(w, W)
    if W > ORDER_STAT_W_MAX:
        raise DomainError(f"W is capped at {ORDER_STAT_W_MAX}")
    if not mean_snr > 0:
        raise DomainError("mean SNR must be positive")
    return mean_snr * (harmonic_number(W) - harmonic_number(W - w))
