"""Poisson traffic model and Chernoff bound on resource outage Pr(Q > N).

Channel demand in a slot is ``Q = W*Y0 + Wbar*V`` with ``Y0 ~ Pois(lam0)``
(new admissions, exploring) and ``V ~ Pois(lam1)`` (earlier admissions still
transmitting), taken as independent. Outage targets are written
``Pr(Q > N) <= exp(-d)`` with ``d > 0``.
"""

import math
from dataclasses import dataclass, field

from .errors import DomainError, InfeasibleError

PMF_TOLERANCE = 1e-12

# exp() overflows just above 709.78
_EXP_LIMIT = 700.0


@dataclass(frozen=True)
class SlotDistribution:
    """pmf of the number of data slots a UE needs, over s = 1..s_max."""

    pmf: tuple

    def __post_init__(self):
        pmf = tuple(float(p) for p in self.pmf)
        if not pmf:
            raise DomainError("slot pmf must have at least one entry")
        if any(p < 0 or not math.isfinite(p) for p in pmf):
            raise DomainError("slot pmf entries must be finite and nonnegative")
        if abs(math.fsum(pmf) - 1.0) > PMF_TOLERANCE:
            raise DomainError(f"slot pmf sums to {math.fsum(pmf)!r}, not 1")
        object.__setattr__(self, "pmf", pmf)

    @classmethod
    def uniform(cls, s_max):
        if isinstance(s_max, bool) or int(s_max) != s_max or s_max < 1:
            raise DomainError(f"s_max must be a positive integer, got {s_max!r}")
        s_max = int(s_max)
        return cls((1.0 / s_max,) * s_max)

    @property
    def s_max(self):
        return len(self.pmf)

    @property
    def mean(self):
        return math.fsum(s * p for s, p in enumerate(self.pmf, start=1))

    def tail(self, s):
        """Pr(slots needed >= s)."""
        if s < 1:
            return 1.0
        return math.fsum(self.pmf[s - 1:])

    def is_uniform(self):
        return all(p == self.pmf[0] for p in self.pmf)


@dataclass(frozen=True)
class TrafficRates:
    lam0: float
    lam1: float
    lam_c: float = field(init=False)

    def __post_init__(self):
        if self.lam0 < 0 or self.lam1 < 0:
            raise DomainError("traffic intensities must be nonnegative")
        object.__setattr__(self, "lam_c", self.lam0 + self.lam1)


@dataclass(frozen=True)
class PsiResult:
    theta_star: float
    psi_star: float

    @property
    def bound(self):
        return math.exp(self.psi_star)


def _check_positive_int(name, v):
    if isinstance(v, bool) or int(v) != v or v < 1:
        raise DomainError(f"{name} must be a positive integer, got {v!r}")


def derive_traffic_rates(lam, L, slots):
    """Intensities of new admissions (lam0) and of still-transmitting UEs (lam1).

    ``lam0 = lam * exp(-lam/L)`` is the Poisson approximation of the number of
    preambles picked by exactly one UE; ``lam1 = lam0 * mean(slots)``.
    """
    if not (math.isfinite(lam) and lam > 0):
        raise DomainError(f"arrival rate must be positive, got {lam!r}")
    _check_positive_int("L", L)
    lam0 = lam * math.exp(-lam / L)
    return TrafficRates(lam0, lam0 * slots.mean)


def residual_rates(lam, L, slots):
    """Per-age intensities lam_s = lam0 * Pr(slots >= s), s = 1..s_max."""
    lam0 = derive_traffic_rates(lam, L, slots).lam0
    return [lam0 * slots.tail(s) for s in range(1, slots.s_max + 1)]


def admitted_pmf(lam, L, a):
    """Pr(Z = a) for Z ~ Bin(L, p), p = (lam/L) exp(-lam/L): preambles picked once."""
    if not (math.isfinite(lam) and lam >= 0):
        raise DomainError(f"arrival rate must be nonnegative, got {lam!r}")
    _check_positive_int("L", L)
    if isinstance(a, bool) or int(a) != a or a < 0 or a > L:
        raise DomainError(f"admitted count must lie in 0..{L}, got {a!r}")
    p = (lam / L) * math.exp(-lam / L)
    return math.comb(L, a) * p ** a * (1.0 - p) ** (L - a)


def psi(theta, W, Wbar, rates, N):
    """Chernoff exponent ``lam0 e^{W t} + lam1 e^{Wbar t} - (lam0 + lam1 + N t)``.

    Returns ``inf`` once ``W * theta`` leaves the representable exponent range.
    """
    if not theta >= 0:
        raise DomainError(f"theta must be nonnegative, got {theta!r}")
    if max(W, Wbar) * theta > _EXP_LIMIT:
        return math.inf
    return (rates.lam0 * math.exp(W * theta) + rates.lam1 * math.exp(Wbar * theta)
            - (rates.lam0 + rates.lam1 + N * theta))


def _psi_slope(theta, W, Wbar, rates, N):
    return (rates.lam0 * W * math.exp(W * theta)
            + rates.lam1 * Wbar * math.exp(Wbar * theta) - N)


def minimize_psi(W, Wbar, rates, N):
    """Minimize ``psi`` over theta >= 0 by bisection on its increasing derivative.

    Raises
    ------
    InfeasibleError
        If ``lam0*W + lam1*Wbar > N``; the minimizer would then sit at a
        negative theta and the bound is trivial.
    """
    _check_positive_int("W", W)
    _check_positive_int("Wbar", Wbar)
    if not N > 0:
        raise DomainError(f"N must be positive, got {N!r}")
    slope0 = _psi_slope(0.0, W, Wbar, rates, N)
    if slope0 > 0:
        raise InfeasibleError(
            f"lam0*W + lam1*Wbar = {slope0 + N:.6g} exceeds N = {N}")
    if slope0 == 0:
        return PsiResult(0.0, 0.0)
    lo, hi = 0.0, 1.0 / max(W, Wbar)
    while _psi_slope(hi, W, Wbar, rates, N) < 0:
        lo, hi = hi, 2.0 * hi
    # run to float resolution; tighter than the 1e-12 theta tolerance required
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _psi_slope(mid, W, Wbar, rates, N) < 0:
            lo = mid
        else:
            hi = mid
    theta = lo if abs(_psi_slope(lo, W, Wbar, rates, N)) <= abs(
        _psi_slope(hi, W, Wbar, rates, N)) else hi
    return PsiResult(theta, psi(theta, W, Wbar, rates, N))


def min_psi_conventional(Wc, rates, N):
    """Closed-form minimum of psi for W = Wbar = Wc."""
    _check_positive_int("Wc", Wc)
    lam_c = rates.lam_c
    if not N > Wc * lam_c:
        raise InfeasibleError(f"need N > Wc*lam_c, got N={N}, Wc*lam_c={Wc * lam_c:.6g}")
    ratio = N / (Wc * lam_c)
    theta = math.log(ratio) / Wc
    return PsiResult(theta, (N / Wc) * (1.0 - math.log(ratio)) - lam_c)


def chernoff_outage_bound(W, Wbar, rates, N):
    """Upper bound on Pr(Q > N): ``exp(min_theta psi)``."""
    return minimize_psi(W, Wbar, rates, N).bound


def feasibility_check(rates, N, d):
    """True iff even one channel per UE (W = Wbar = 1) meets the target exp(-d)."""
    lam_c = rates.lam_c
    if lam_c <= 0:
        return N > 0
    if N < lam_c:
        return False
    return N * (1.0 - math.log(N / lam_c)) - lam_c <= -d
