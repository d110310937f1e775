"""Mean transmission rates of EBT and of the conventional (no exploration) scheme.

All rates are in bits/s/Hz summed over the kept channels, per data slot;
the pilot slot carries no counted data. SNRs are linear.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
from scipy import integrate

from .errors import DomainError, QuadratureError
from .specfun import (
    e1_scaled_generic,
    exp_integral_e1_scaled,
    mp_context,
    order_stat_pdf,
)

# Beyond this W the alternating closed form is not used; see mean_rate_ebt.
W_EXACT_MAX = 30
# Working digits for the closed form. The largest integer weight at
# W = 30 has 17 digits, so this leaves > 30 digits after cancellation.
EXACT_DPS = 50

LN2 = math.log(2.0)


@dataclass(frozen=True)
class EbtPlan:
    """Explore ``W`` channels in the pilot slot, keep the ``Wbar`` best for data."""

    W: int
    Wbar: int

    def __post_init__(self):
        for name in ("W", "Wbar"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.Wbar > self.W:
            raise DomainError(f"Wbar ({self.Wbar}) cannot exceed W ({self.W})")


@dataclass(frozen=True)
class ConvPlan:
    """Conventional allocation of ``Wc`` channels; real-valued in rate comparisons."""

    Wc: float

    def __post_init__(self):
        if not (math.isfinite(self.Wc) and self.Wc > 0):
            raise DomainError(f"Wc must be positive, got {self.Wc!r}")


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def linear_to_db(x):
    return 10.0 * math.log10(x)


def _check_snr(mean_snr):
    if not (math.isfinite(mean_snr) and mean_snr > 0):
        raise DomainError(f"mean SNR must be positive and finite, got {mean_snr!r}")


def _as_plan(plan):
    if isinstance(plan, EbtPlan):
        return plan
    return EbtPlan(*plan)


def single_channel_rate(mean_snr):
    """E[log2(1 + g)] for g exponential with mean ``mean_snr``."""
    _check_snr(mean_snr)
    return exp_integral_e1_scaled(1.0 / mean_snr) / LN2


def mean_rate_conventional(Wc, mean_snr):
    """Rate of ``Wc`` randomly chosen channels: ``Wc * e^{1/g} E1(1/g) / ln 2``."""
    if isinstance(Wc, ConvPlan):
        Wc = Wc.Wc
    if not (math.isfinite(Wc) and Wc > 0):
        raise DomainError(f"Wc must be positive, got {Wc!r}")
    return Wc * single_channel_rate(mean_snr)


def closed_form_coefficients(W, Wbar):
    """Integer weights c_a, a = 1..W, of the closed-form rate.

    The rate equals ``sum_a c_a * e^{a/g} E1(a/g) / (a ln 2)``. Collecting the
    double sum over (w, m) by a = W - w + 1 + m leaves only W distinct E1
    evaluations; the weights are exact integers because
    W!/((W-w)! (w-1-m)! m!) = W * multinomial(W-1; W-w, w-1-m, m).
    """
    fact = math.factorial
    coeffs = [0] * (W + 1)
    for w in range(W - Wbar + 1, W + 1):
        head = fact(W) // fact(W - w)
        for m in range(w):
            a = W - w + 1 + m
            term = head // (fact(w - 1 - m) * fact(m))
            coeffs[a] += -term if m % 2 else term
    return coeffs


@lru_cache(maxsize=8192)
def _scaled_e1_term(a, mean_snr):
    """``e^{a/g} E1(a/g) / a`` at EXACT_DPS digits."""
    with mpmath.workdps(EXACT_DPS):
        x = mpmath.mpf(a) / mpmath.mpf(mean_snr)
        return e1_scaled_generic(x, mp_context(mpmath.mp)) / a


def mean_rate_ebt_exact(plan, mean_snr):
    """Closed-form EBT rate (binomial expansion of the order-statistic pdfs).

    The alternating sum cancels heavily as W grows, so it is evaluated with
    exact integer weights and E1 at extended precision. Restricted to
    ``W <= W_EXACT_MAX``.
    """
    plan = _as_plan(plan)
    _check_snr(mean_snr)
    W, Wbar = plan.W, plan.Wbar
    if W > W_EXACT_MAX:
        raise DomainError(
            f"closed form limited to W <= {W_EXACT_MAX}; use mean_rate_ebt_quadrature")
    coeffs = closed_form_coefficients(W, Wbar)
    with mpmath.workdps(EXACT_DPS):
        total = mpmath.fsum(c * _scaled_e1_term(a, float(mean_snr))
                            for a, c in enumerate(coeffs) if c)
        return float(total / mpmath.log(2))


def _order_stat_log_rate(w, W, mean_snr, epsrel):
    def f(x):
        return math.log2(1.0 + mean_snr * x) * order_stat_pdf(w, W, x)

    # split where the pdf has long since peaked; the tail is integrated to inf
    split = 2.0 * (math.log(W) + 1.0) + 1.0
    total = 0.0
    err = 0.0
    for lo, hi in ((0.0, split), (split, math.inf)):
        val, abserr = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=epsrel, limit=200)
        total += val
        err += abserr
    return total, err


def mean_rate_ebt_quadrature(plan, mean_snr, epsrel=1e-12, max_rel_error=1e-9):
    """EBT rate by numerically integrating each kept order statistic.

    Raises :class:`QuadratureError` when the summed error estimate exceeds
    ``max_rel_error`` relative to the result.
    """
    plan = _as_plan(plan)
    _check_snr(mean_snr)
    W, Wbar = plan.W, plan.Wbar
    total = 0.0
    err = 0.0
    for w in range(W - Wbar + 1, W + 1):
        val, e = _order_stat_log_rate(w, W, mean_snr, epsrel)
        total += val
        err += e
    if not math.isfinite(total) or err > max_rel_error * abs(total):
        raise QuadratureError(
            f"quadrature for W={W}, Wbar={Wbar} reached error estimate {err:.3g}", err)
    return total


def mean_rate_ebt(plan, mean_snr):
    """Authoritative EBT rate: closed form up to W_EXACT_MAX, quadrature beyond."""
    plan = _as_plan(plan)
    if plan.W <= W_EXACT_MAX:
        return mean_rate_ebt_exact(plan, mean_snr)
    return mean_rate_ebt_quadrature(plan, mean_snr)


def _check_approx_regime(plan):
    if plan.Wbar >= plan.W:
        raise DomainError(
            f"large-W approximation needs Wbar < W, got W={plan.W}, Wbar={plan.Wbar}")


def mean_rate_ebt_approx(plan, mean_snr):
    """High-diversity approximation ``sum_{i=1}^{Wbar} log2(1 + g ln(W/i))``."""
    plan = _as_plan(plan)
    _check_snr(mean_snr)
    _check_approx_regime(plan)
    return math.fsum(math.log2(1.0 + mean_snr * math.log(plan.W / i))
                     for i in range(1, plan.Wbar + 1))


def mean_rate_ebt_lower_bound(plan, mean_snr):
    """``Wbar * log2(1 + g ln(W/Wbar))``; the weakest term of the approximation repeated."""
    plan = _as_plan(plan)
    _check_snr(mean_snr)
    _check_approx_regime(plan)
    return plan.Wbar * math.log2(1.0 + mean_snr * math.log(plan.W / plan.Wbar))


def equivalent_conventional_width(plan, s):
    """Conventional width using the same total channel-slots as EBT over ``s`` data slots."""
    plan = _as_plan(plan)
    if isinstance(s, bool) or int(s) != s or s < 1:
        raise DomainError(f"s must be a positive integer, got {s!r}")
    return (plan.W + s * plan.Wbar) / (1 + s)
