"""Slot-level Monte Carlo of the uplink pipeline.

Per slot: K ~ Pois(lam) UEs pick one of L preambles; UEs whose preamble is
unique are admitted, draw their data-slot count s from the slot pmf and
explore W channels (pilot slot), then hold Wbar channels for s data slots.
The conventional policy holds Wc channels throughout. Demand Q counts
exploring plus transmitting UEs; if Q > N the slot is an outage and its
new admissions are dropped, earlier UEs are unaffected.

Channels are iid per (UE, channel) and static over a UE's s+1 slots, so the
simulator tracks occupancy counts and per-UE SNR draws instead of a
channel map. The first s_max slots are warm-up and excluded from metrics.

Arrivals are generated for the whole horizon at once; the only sequential
coupling is outage dropping, and since drops only lower future demand it
is enough to revisit the slots whose undropped demand exceeds N, in order.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError

# UEs per vectorized SNR block; bounds memory at block * W doubles
_RATE_BLOCK = 1 << 17
# slots per preamble-contention block
_ARRIVAL_BLOCK = 1 << 16


@dataclass(frozen=True)
class Policy:
    """Channel policy: ``ebt`` explores W then keeps Wbar; ``conventional`` holds Wc."""

    kind: str
    W: int
    Wbar: int

    @classmethod
    def ebt(cls, W, Wbar):
        if not 1 <= Wbar <= W:
            raise DomainError(f"need 1 <= Wbar <= W, got W={W}, Wbar={Wbar}")
        return cls("ebt", int(W), int(Wbar))

    @classmethod
    def conventional(cls, Wc):
        if Wc < 1 or int(Wc) != Wc:
            raise DomainError(f"Wc must be a positive integer, got {Wc!r}")
        return cls("conventional", int(Wc), int(Wc))


@dataclass(frozen=True)
class SlotLedger:
    slot_index: int
    demand: int
    outage: bool
    new_arrivals: int
    admitted: int
    exploring: int
    transmitting: int


@dataclass
class SimTrace:
    """Per-slot arrays over the whole horizon (warm-up included) and per-UE arrays."""

    arrivals: np.ndarray
    admitted: np.ndarray
    exploring: np.ndarray
    transmitting: np.ndarray
    demand: np.ndarray
    outage: np.ndarray
    ue_slot: np.ndarray
    ue_slots_needed: np.ndarray
    ue_dropped: np.ndarray

    def ledger(self, t):
        return SlotLedger(int(t), int(self.demand[t]), bool(self.outage[t]),
                          int(self.arrivals[t]), int(self.admitted[t]),
                          int(self.exploring[t]), int(self.transmitting[t]))


@dataclass
class SimMetrics:
    """Aggregated outcome of one or more runs.

    Rates are averaged per data slot: a UE holding rate r for s slots
    contributes weight s. The raw sums are kept so that :meth:`merge` is
    associative and exact.
    """

    slot_count: int = 0
    outage_count: int = 0
    ue_count: int = 0
    dropped_count: int = 0
    # sums over UEs of s, s*r, s^2, s^2*r, s^2*r^2
    sum_s: float = 0.0
    sum_sr: float = 0.0
    sum_s2: float = 0.0
    sum_s2r: float = 0.0
    sum_s2r2: float = 0.0
    admitted_total: int = 0
    rng_seed: str = ""
    trace: Optional[SimTrace] = field(default=None, repr=False)

    @property
    def outage_fraction(self):
        if self.slot_count == 0:
            return math.nan
        return self.outage_count / self.slot_count

    @property
    def outage_stderr(self):
        p = self.outage_fraction
        return math.sqrt(p * (1.0 - p) / self.slot_count) if self.slot_count else math.nan

    @property
    def mean_rate_per_data_slot(self):
        if self.sum_s == 0:
            return math.nan
        return self.sum_sr / self.sum_s

    @property
    def rate_stderr(self):
        n = self.ue_count
        if n < 2 or self.sum_s == 0:
            return math.nan
        r = self.mean_rate_per_data_slot
        resid = (self.sum_s2r2 - 2.0 * r * self.sum_s2r + r * r * self.sum_s2) / n
        mean_s = self.sum_s / n
        return math.sqrt(max(resid, 0.0) / n) / mean_s

    @property
    def mean_admitted_per_slot(self):
        return self.admitted_total / self.slot_count if self.slot_count else math.nan

    @property
    def outage_observed(self):
        return self.outage_count > 0

    @property
    def empirical_qos_exponent(self):
        return empirical_qos_exponent(self)

    def merge(self, other):
        out = SimMetrics()
        for name in ("slot_count", "outage_count", "ue_count", "dropped_count",
                     "sum_s", "sum_sr", "sum_s2", "sum_s2r", "sum_s2r2", "admitted_total"):
            setattr(out, name, getattr(self, name) + getattr(other, name))
        out.rng_seed = ";".join(x for x in (self.rng_seed, other.rng_seed) if x)
        return out


def empirical_qos_exponent(metrics):
    """``-ln(outage_fraction)``.

    With no outage observed the value is the one-sided lower bound
    ``ln(slot_count)``; check ``metrics.outage_observed``.
    """
    if metrics.slot_count == 0:
        return math.nan
    if metrics.outage_count == 0:
        return math.log(metrics.slot_count)
    return -math.log(metrics.outage_fraction)


def simulate_preamble_step(K, L, rng):
    """Number of the L preambles picked by exactly one of K UEs."""
    if K < 0 or L < 1:
        raise DomainError("need K >= 0 and L >= 1")
    if K == 0:
        return 0
    counts = np.bincount(rng.integers(0, L, size=K), minlength=L)
    return int(np.count_nonzero(counts == 1))


def draw_snrs(count, mean_snr, rng):
    """iid Rayleigh-fading SNRs: exponential with mean ``mean_snr``."""
    return rng.exponential(mean_snr, size=count)


def select_best_channels(snrs, Wbar):
    """Keep the Wbar largest SNRs (ties to the lower index); return (kept, sum log2(1+snr))."""
    snrs = np.asarray(snrs, dtype=float)
    if Wbar < 1 or Wbar > snrs.size:
        raise DomainError(f"cannot keep {Wbar} of {snrs.size} channels")
    order = np.argsort(-snrs, kind="stable")[:Wbar]
    kept = snrs[np.sort(order)]
    return kept, float(np.sum(np.log2(1.0 + kept)))


def _rng_streams(seed):
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    token = f"{ss.entropy}:{','.join(map(str, ss.spawn_key))}"
    arrivals, preambles, service, channels = (
        np.random.Generator(np.random.Philox(child)) for child in ss.spawn(4))
    return token, arrivals, preambles, service, channels


def _admissions(K, L, rng):
    """Per-slot admitted counts for arrival vector K (vectorized preamble contention)."""
    T = K.size
    Z = np.zeros(T, dtype=np.int64)
    for start in range(0, T, _ARRIVAL_BLOCK):
        k = K[start:start + _ARRIVAL_BLOCK]
        n = int(k.sum())
        if n == 0:
            continue
        slot = np.repeat(np.arange(k.size, dtype=np.int64), k)
        key = slot * L + rng.integers(0, L, size=n)
        uniq, cnt = np.unique(key, return_counts=True)
        Z[start:start + k.size] = np.bincount(uniq[cnt == 1] // L, minlength=k.size)
    return Z


def _draw_slots_needed(count, slots, rng):
    cdf = np.cumsum(slots.pmf)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, rng.random(count), side="right") + 1


def _ue_rates(count, policy, mean_snr, rng):
    W, Wbar = policy.W, policy.Wbar
    out = np.empty(count)
    for start in range(0, count, _RATE_BLOCK):
        n = min(_RATE_BLOCK, count - start)
        g = draw_snrs((n, W), mean_snr, rng)
        if Wbar < W:
            g = np.partition(g, W - Wbar, axis=1)[:, W - Wbar:]
        out[start:start + n] = np.log2(1.0 + g).sum(axis=1)
    return out


def run_simulation(params, policy, horizon_slots, seed, *, rates=True, trace=False):
    """Simulate ``horizon_slots`` slots of the uplink under ``policy``.

    Parameters
    ----------
    params : SystemParams
    policy : Policy
    horizon_slots : int
        Total slots simulated, warm-up (``s_max`` slots) included.
    seed : int or numpy.random.SeedSequence
        Same (params, policy, horizon, seed) gives bit-identical metrics.
    rates : bool
        Draw channel SNRs and accumulate rates; off for outage-only runs.
    trace : bool
        Attach a :class:`SimTrace` to the result.
    """
    if policy.W > params.N:
        raise DomainError(f"policy needs {policy.W} channels but N = {params.N}")
    warmup = params.slots.s_max
    T = int(horizon_slots)
    if T <= warmup:
        raise DomainError(f"horizon {T} must exceed the warm-up of {warmup} slots")
    token, rng_arr, rng_pre, rng_srv, rng_ch = _rng_streams(seed)

    K = rng_arr.poisson(params.lam, size=T)
    Z = _admissions(K, params.L, rng_pre)
    n_ue = int(Z.sum())
    ue_slot = np.repeat(np.arange(T, dtype=np.int64), Z)
    ue_s = _draw_slots_needed(n_ue, params.slots, rng_srv)
    first_ue = np.concatenate(([0], np.cumsum(Z)))

    # transmitting count before any drop: UE admitted at t0 sends in t0+1..t0+s
    span = T + params.slots.s_max + 2
    diff = (np.bincount(ue_slot + 1, minlength=span)
            - np.bincount(ue_slot + 1 + ue_s, minlength=span))
    V = np.cumsum(diff)[:T]
    W, Wbar = policy.W, policy.Wbar
    Q = W * Z + Wbar * V

    outage = np.zeros(T, dtype=bool)
    dropped = np.zeros(n_ue, dtype=bool)
    N = params.N
    for t in np.flatnonzero(Q > N):
        if Q[t] <= N:
            continue
        outage[t] = True
        for u in range(first_ue[t], first_ue[t + 1]):
            dropped[u] = True
            stop = min(t + 1 + ue_s[u], T)
            V[t + 1:stop] -= 1
            Q[t + 1:stop] -= Wbar

    metrics = SimMetrics(rng_seed=token)
    window = slice(warmup, T)
    metrics.slot_count = T - warmup
    metrics.outage_count = int(outage[window].sum())
    metrics.admitted_total = int(Z[window].sum())
    counted = (~dropped) & (ue_slot >= warmup)
    metrics.ue_count = int(counted.sum())
    metrics.dropped_count = int((dropped & (ue_slot >= warmup)).sum())

    if rates:
        # every admitted UE gets a draw so streams do not depend on outages
        r = _ue_rates(n_ue, policy, params.mean_snr, rng_ch)[counted]
        s = ue_s[counted].astype(float)
        metrics.sum_s = float(s.sum())
        metrics.sum_sr = float((s * r).sum())
        metrics.sum_s2 = float((s * s).sum())
        metrics.sum_s2r = float((s * s * r).sum())
        metrics.sum_s2r2 = float((s * s * r * r).sum())

    if trace:
        metrics.trace = SimTrace(K, Z, Z.copy(), V, Q, outage, ue_slot, ue_s, dropped)
    return metrics
