import math

import pytest

from ebt import (
    DomainError,
    EbtPlan,
    InfeasibleError,
    SlotDistribution,
    SystemParams,
    chernoff_outage_bound,
    mean_rate_ebt,
    min_psi_conventional,
    minimize_psi,
    optimal_wbar_for_w,
    optimize,
    optimize_conventional,
    optimize_ebt,
)
from ebt.optimizer import RATE_TIE_RTOL, packet_budget
from oracles import brute_force_feasible
from reference_tables import D05, TABLE3, TABLE3_PRINTED_D, TABLES, scenarios


def _params(N=300, lam=8.0, L=32, s_max=10, snr_db=6.0, d=D05):
    return SystemParams.from_db(N, lam, L, s_max, snr_db, d)


@pytest.mark.parametrize("name", sorted(TABLES))
def test_reference_tables(name):
    for params, (W, Wbar, Wc) in scenarios(TABLES[name]):
        out = optimize(params)
        assert out.feasible
        assert (out.ebt_plan.W, out.ebt_plan.Wbar, int(out.conv_plan.Wc)) == (W, Wbar, Wc)


def test_table3_printed_d_values():
    # The printed d row is truncated; taken literally only d = 3.6 moves (W 9 -> 10).
    moved = []
    for i, d in enumerate(TABLE3_PRINTED_D):
        out = optimize(_params(d=d))
        got = (out.ebt_plan.W, out.ebt_plan.Wbar, int(out.conv_plan.Wc))
        if got != (TABLE3["W"][i], TABLE3["Wbar"][i], TABLE3["Wc"][i]):
            moved.append((d, got))
    assert moved == [(3.6, (10, 4, 5))]


def test_system_params_validation():
    with pytest.raises(DomainError):
        _params(N=0)
    with pytest.raises(DomainError):
        _params(d=0.0)
    with pytest.raises(DomainError):
        SystemParams(10, 1.0, 4, (0.5, 0.5), 1.0, 1.0)
    p = _params()
    assert p.mean_snr_db == pytest.approx(6.0)
    assert p.outage_target == pytest.approx(0.05)


def test_optimal_wbar_reference():
    assert optimal_wbar_for_w(10, _params()) == 4


def test_optimal_wbar_absent():
    # lam0*W + lam1 > N already at Wbar = 1
    assert optimal_wbar_for_w(60, _params()) is None
    with pytest.raises(DomainError):
        optimal_wbar_for_w(0, _params())


SMALL = [
    dict(N=40, lam=3.0, L=8, s_max=3),
    dict(N=60, lam=5.0, L=16, s_max=2),
    dict(N=80, lam=4.0, L=12, s_max=4),
    dict(N=100, lam=8.0, L=32, s_max=5),
    dict(N=100, lam=2.0, L=6, s_max=6, d=-math.log(0.01)),
]


@pytest.mark.parametrize("case", SMALL)
def test_optimal_wbar_matches_exhaustive(case):
    params = _params(**case)
    r = params.traffic_rates()
    feasible = brute_force_feasible(r.lam0, r.lam1, params.N, params.d, 30)
    for W in range(1, 31):
        expected = max((wb for (w, wb) in feasible if w == W), default=None)
        assert optimal_wbar_for_w(W, params, r) == expected


@pytest.mark.parametrize("case", SMALL)
def test_optimize_ebt_matches_exhaustive(case):
    params = _params(**case)
    r = params.traffic_rates()
    feasible = brute_force_feasible(r.lam0, r.lam1, params.N, params.d, params.N)
    best = None
    for W, Wbar in sorted(feasible):
        rate = mean_rate_ebt(EbtPlan(W, Wbar), params.mean_snr)
        if best is None or rate > best[1] * (1.0 + RATE_TIE_RTOL):
            best = ((W, Wbar), rate)
    out = optimize_ebt(params)
    assert (out.ebt_plan.W, out.ebt_plan.Wbar) == best[0]
    assert {(p.W, p.Wbar) for p, _ in out.candidates} == {
        (W, max(wb for (w, wb) in feasible if w == W)) for W, _ in feasible}


@pytest.mark.parametrize("case", SMALL)
def test_early_stop_sound(case):
    params = _params(**case)
    r = params.traffic_rates()
    absent_seen = False
    for W in range(1, params.N + 1):
        try:
            ok = minimize_psi(W, 1, r, params.N).psi_star <= -params.d
        except InfeasibleError:
            ok = False
        if absent_seen:
            assert not ok
        absent_seen = absent_seen or not ok


@pytest.mark.parametrize("case", SMALL)
def test_work_bound_and_constraint(case):
    params = _params(**case)
    out = optimize(params)
    N = params.N
    assert out.psi_evaluations <= N * (N + 1) // 2
    if out.ebt_plan is not None:
        assert out.ebt_plan.Wbar <= out.ebt_plan.W
        assert out.ebt_psi <= -params.d
        assert chernoff_outage_bound(out.ebt_plan.W, out.ebt_plan.Wbar,
                                     params.traffic_rates(), N) <= math.exp(-params.d)
    if out.conv_plan is not None:
        assert out.conv_psi <= -params.d


def test_ebt_beats_conventional_on_tables():
    for table in TABLES.values():
        for params, _ in scenarios(table):
            if params.slots.s_max < 4:
                continue
            out = optimize(params)
            assert out.ebt_rate >= out.conv_rate


def test_conventional_reference_points():
    assert optimize_conventional(_params()).conv_plan.Wc == 5
    assert optimize_conventional(_params(d=-math.log(0.01))).conv_plan.Wc == 4
    assert optimize_conventional(_params(lam=20.0, L=10)).conv_plan.Wc == 10


def test_conventional_coarseness_visible():
    # at d = -ln 0.01 the step from Wc = 4 to 5 overshoots: Wc = 5 reaches only -4.08
    rates = _params().traffic_rates()
    assert min_psi_conventional(5, rates, 300).psi_star == pytest.approx(-4.0837, abs=5e-4)
    out = optimize_conventional(_params(d=-math.log(0.01)))
    assert out.conv_psi == min_psi_conventional(4, rates, 300).psi_star
    assert out.conv_psi < -math.log(0.01)


def test_infeasible_scenario():
    out = optimize(_params(N=20, lam=8.0))
    assert not out.feasible
    assert out.ebt_plan is None and out.conv_plan is None
    assert packet_budget(out, SlotDistribution.uniform(10)) == (None, None)


def test_packet_budget_reference():
    params = _params()
    ebt, conv = packet_budget(optimize(params), params.slots)
    assert ebt == 32.0
    assert conv == 32.5


def test_ties_prefer_smaller_w(monkeypatch):
    import ebt.optimizer as opt

    monkeypatch.setattr(opt, "mean_rate_ebt", lambda plan, snr: 1.0)
    out = opt.optimize_ebt(_params())
    assert out.ebt_plan.W == 1
