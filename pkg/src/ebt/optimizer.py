"""Rate maximization under the outage constraint ``min_theta psi <= -d``.

EBT searches (W, Wbar) column by column: for each W the largest feasible
Wbar is found by counting up from 1 (the minimized exponent is strictly
increasing in Wbar), and the scan over W stops at the first W with no
feasible Wbar (it is also increasing in W). The conventional scheme is the
one-dimensional special case W = Wbar = Wc.
"""

import math
from dataclasses import dataclass
from typing import Optional

from .errors import DomainError, InfeasibleError
from .outage_model import (
    SlotDistribution,
    derive_traffic_rates,
    feasibility_check,
    min_psi_conventional,
    minimize_psi,
)
from .rate_model import (
    ConvPlan,
    EbtPlan,
    db_to_linear,
    linear_to_db,
    mean_rate_conventional,
    mean_rate_ebt,
)

# relative slack under which two rates count as tied
RATE_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class SystemParams:
    """Scenario: N channels, Poisson(lam) arrivals, L preambles, slot pmf, mean SNR, target d."""

    N: int
    lam: float
    L: int
    slots: SlotDistribution
    mean_snr: float
    d: float

    def __post_init__(self):
        for name in ("N", "L"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise DomainError(f"lam must be nonnegative, got {self.lam!r}")
        if not (math.isfinite(self.mean_snr) and self.mean_snr > 0):
            raise DomainError(f"mean_snr must be positive, got {self.mean_snr!r}")
        if not (math.isfinite(self.d) and self.d > 0):
            raise DomainError(f"d must be positive, got {self.d!r}")
        if not isinstance(self.slots, SlotDistribution):
            raise DomainError("slots must be a SlotDistribution")

    @classmethod
    def from_db(cls, N, lam, L, s_max, mean_snr_db, d):
        """Uniform slot pmf over 1..s_max and SNR given in dB."""
        return cls(N, lam, L, SlotDistribution.uniform(s_max), db_to_linear(mean_snr_db), d)

    @property
    def mean_snr_db(self):
        return linear_to_db(self.mean_snr)

    @property
    def outage_target(self):
        return math.exp(-self.d)

    def traffic_rates(self):
        return derive_traffic_rates(self.lam, self.L, self.slots)


@dataclass
class OptimizationOutcome:
    ebt_plan: Optional[EbtPlan] = None
    conv_plan: Optional[ConvPlan] = None
    ebt_rate: Optional[float] = None
    conv_rate: Optional[float] = None
    ebt_psi: Optional[float] = None
    conv_psi: Optional[float] = None
    feasible: bool = False
    # every (W, Wbar*) visited by the EBT scan, with its rate
    candidates: tuple = ()
    psi_evaluations: int = 0


def _psi_or_none(W, Wbar, rates, N):
    try:
        return minimize_psi(W, Wbar, rates, N).psi_star
    except InfeasibleError:
        return None


def _scan_wbar(W, rates, N, d):
    """Largest feasible Wbar for this W (0 if none) and the number of psi minimizations."""
    best = 0
    evals = 0
    for Wbar in range(1, W + 1):
        evals += 1
        p = _psi_or_none(W, Wbar, rates, N)
        if p is None or p > -d:
            break
        best = Wbar
    return best, evals


def optimal_wbar_for_w(W, params, rates=None):
    """Largest Wbar in 1..W meeting the outage target, or None."""
    if isinstance(W, bool) or int(W) != W or W < 1:
        raise DomainError(f"W must be a positive integer, got {W!r}")
    rates = rates or params.traffic_rates()
    best, _ = _scan_wbar(int(W), rates, params.N, params.d)
    return best or None


def optimize_ebt(params, rates=None):
    """Best EBT plan by the column scan; infeasible outcome if W = Wbar = 1 fails.

    Among feasible pairs the highest mean rate wins, ties going to the
    smaller W.
    """
    rates = rates or params.traffic_rates()
    out = OptimizationOutcome()
    if not feasibility_check(rates, params.N, params.d):
        return out
    candidates = []
    evals = 0
    for W in range(1, params.N + 1):
        Wbar, n = _scan_wbar(W, rates, params.N, params.d)
        evals += n
        if Wbar == 0:
            break
        plan = EbtPlan(W, Wbar)
        candidates.append((plan, mean_rate_ebt(plan, params.mean_snr)))
    out.psi_evaluations = evals
    out.candidates = tuple(candidates)
    if not candidates:
        return out
    best_plan, best_rate = candidates[0]
    for plan, rate in candidates[1:]:
        if rate > best_rate * (1.0 + RATE_TIE_RTOL):
            best_plan, best_rate = plan, rate
    out.ebt_plan = best_plan
    out.ebt_rate = best_rate
    out.ebt_psi = minimize_psi(best_plan.W, best_plan.Wbar, rates, params.N).psi_star
    out.feasible = True
    return out


def optimize_conventional(params, rates=None):
    """Largest integer Wc whose minimized exponent stays at or below -d."""
    rates = rates or params.traffic_rates()
    out = OptimizationOutcome()
    Wc = 0
    psi_best = None
    while Wc < params.N:
        try:
            p = min_psi_conventional(Wc + 1, rates, params.N).psi_star
        except InfeasibleError:
            break
        if p > -params.d:
            break
        Wc += 1
        psi_best = p
    if Wc == 0:
        return out
    out.conv_plan = ConvPlan(float(Wc))
    out.conv_rate = mean_rate_conventional(Wc, params.mean_snr)
    out.conv_psi = psi_best
    out.feasible = True
    return out


def optimize(params):
    """Run both optimizers on the same traffic model and merge the outcomes."""
    rates = params.traffic_rates()
    ebt = optimize_ebt(params, rates)
    conv = optimize_conventional(params, rates)
    ebt.conv_plan = conv.conv_plan
    ebt.conv_rate = conv.conv_rate
    ebt.conv_psi = conv.conv_psi
    ebt.feasible = ebt.ebt_plan is not None and conv.conv_plan is not None
    return ebt


def packet_budget(outcome, slots):
    """Mean channel-slots per UE, pilot included: (W + s_bar*Wbar, (s_bar + 1)*Wc)."""
    s_bar = slots.mean
    ebt = conv = None
    if outcome.ebt_plan is not None:
        ebt = outcome.ebt_plan.W + s_bar * outcome.ebt_plan.Wbar
    if outcome.conv_plan is not None:
        conv = (s_bar + 1.0) * outcome.conv_plan.Wc
    return ebt, conv
