import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ebt.errors import DomainError
from ebt.rate_model import (
    W_EXACT_MAX,
    ConvPlan,
    EbtPlan,
    db_to_linear,
    equivalent_conventional_width,
    mean_rate_conventional,
    mean_rate_ebt,
    mean_rate_ebt_approx,
    mean_rate_ebt_exact,
    mean_rate_ebt_lower_bound,
    mean_rate_ebt_quadrature,
)
from ebt.specfun import exp_integral_e1
from oracles import conventional_rate_quadrature, mc_top_order_rates

SNR_10DB = db_to_linear(10.0)

# conventional_rate_quadrature(10.0), frozen
CONV_RATE_SNR10 = 2.9065148084148045


def test_plan_validation():
    with pytest.raises(DomainError):
        EbtPlan(3, 4)
    with pytest.raises(DomainError):
        EbtPlan(0, 0)
    with pytest.raises(DomainError):
        ConvPlan(0.0)
    assert EbtPlan(5.0, 2).W == 5


def test_single_channel_exact_equals_conventional():
    for g in [0.3, 1.0, SNR_10DB, 250.0]:
        expect = math.exp(1 / g) / math.log(2) * exp_integral_e1(1 / g)
        assert mean_rate_ebt_exact(EbtPlan(1, 1), g) == pytest.approx(expect, rel=1e-13)
        assert mean_rate_conventional(1, g) == pytest.approx(expect, rel=1e-13)


def test_conventional_value_against_quadrature_oracle():
    assert conventional_rate_quadrature(10.0) == pytest.approx(CONV_RATE_SNR10, rel=1e-12)
    assert mean_rate_conventional(1, 10.0) == pytest.approx(CONV_RATE_SNR10, rel=1e-12)


def test_conventional_linear_in_width():
    for Wc in [0.5, 1.0, 2.727, 7.0]:
        assert mean_rate_conventional(2 * Wc, 4.0) == pytest.approx(
            2 * mean_rate_conventional(Wc, 4.0), rel=1e-15)
    with pytest.raises(DomainError):
        mean_rate_conventional(0, 4.0)
    with pytest.raises(DomainError):
        mean_rate_conventional(1, -1.0)


def test_keep_all_equals_conventional():
    for W in [2, 20]:
        assert mean_rate_ebt_exact(EbtPlan(W, W), 3.0) == pytest.approx(
            mean_rate_conventional(W, 3.0), rel=1e-12)
        assert mean_rate_ebt_quadrature(EbtPlan(W, W), 3.0) == pytest.approx(
            mean_rate_conventional(W, 3.0), rel=1e-10)


@pytest.mark.parametrize("g", [1.0, db_to_linear(6.0), SNR_10DB])
def test_exact_matches_quadrature_up_to_exact_max(g):
    for W in range(2, W_EXACT_MAX + 1):
        for Wbar in sorted({1, 2, W // 2, W - 1, W} - {0}):
            plan = EbtPlan(W, Wbar)
            assert mean_rate_ebt_exact(plan, g) == pytest.approx(
                mean_rate_ebt_quadrature(plan, g), rel=1e-8)


def test_exact_refuses_beyond_cap():
    with pytest.raises(DomainError):
        mean_rate_ebt_exact(EbtPlan(W_EXACT_MAX + 1, 1), 2.0)
    # the dispatcher falls back to quadrature
    assert mean_rate_ebt(EbtPlan(W_EXACT_MAX + 1, 1), 2.0) > mean_rate_ebt(EbtPlan(W_EXACT_MAX, 1), 2.0)


def test_exact_against_monte_carlo_w20_wbar5():
    mean, se = mc_top_order_rates(20, SNR_10DB, 10 ** 6, seed=5)
    assert abs(mean_rate_ebt_exact(EbtPlan(20, 5), SNR_10DB) - mean[4]) < 3 * se[4]


def test_quadrature_large_W_monotone():
    r50 = mean_rate_ebt_quadrature(EbtPlan(50, 5), 4.0)
    r40 = mean_rate_ebt_quadrature(EbtPlan(40, 5), 4.0)
    assert math.isfinite(r50) and r50 > r40 > 0
    mean, se = mc_top_order_rates(50, 4.0, 200_000, seed=9)
    assert abs(r50 - mean[4]) < 3 * se[4]


def test_monotone_in_exploration_and_exploitation():
    g = db_to_linear(6.0)
    for W in range(1, W_EXACT_MAX):
        for Wbar in range(1, W + 1):
            assert mean_rate_ebt_exact(EbtPlan(W + 1, Wbar), g) >= mean_rate_ebt_exact(EbtPlan(W, Wbar), g)
            if Wbar < W:
                assert mean_rate_ebt_exact(EbtPlan(W, Wbar + 1), g) > mean_rate_ebt_exact(EbtPlan(W, Wbar), g)


def test_approx_values():
    assert mean_rate_ebt_approx(EbtPlan(100, 1), 10.0) == pytest.approx(
        math.log2(1 + 10 * math.log(100)), rel=1e-14)
    assert mean_rate_ebt_approx(EbtPlan(100, 1), 10.0) == pytest.approx(5.5562, abs=5e-5)
    assert mean_rate_ebt_lower_bound(EbtPlan(2, 1), 1.0) == pytest.approx(
        math.log2(1 + math.log(2)), rel=1e-14)
    assert mean_rate_ebt_lower_bound(EbtPlan(2, 1), 1.0) == pytest.approx(0.759707, abs=5e-7)


def test_approx_regime_enforced():
    for fn in (mean_rate_ebt_approx, mean_rate_ebt_lower_bound):
        with pytest.raises(DomainError):
            fn(EbtPlan(4, 4), 2.0)


def test_approx_close_to_quadrature_w200_wbar10():
    q = mean_rate_ebt_quadrature(EbtPlan(200, 10), SNR_10DB)
    assert abs(mean_rate_ebt_approx(EbtPlan(200, 10), SNR_10DB) - q) / q <= 0.05


def test_approximation_sandwich_regime():
    for Wbar in (5, 8, 12):
        for W in (10 * Wbar, 20 * Wbar):
            for g in (1.0, db_to_linear(6.0), SNR_10DB, 100.0):
                q = mean_rate_ebt_quadrature(EbtPlan(W, Wbar), g)
                assert abs(mean_rate_ebt_approx(EbtPlan(W, Wbar), g) - q) / q <= 0.1


def test_fig3_lower_bound_value():
    lb = mean_rate_ebt_lower_bound(EbtPlan(20, 5), SNR_10DB)
    assert lb == pytest.approx(5 * math.log2(1 + 10 * math.log(4)), rel=1e-14)
    assert lb <= mean_rate_ebt_approx(EbtPlan(20, 5), SNR_10DB)


@settings(max_examples=300)
@given(st.integers(2, 200).flatmap(lambda W: st.tuples(st.just(W), st.integers(1, W - 1))),
       st.floats(0.01, 1000.0))
def test_lower_bound_below_approx(plan, g):
    W, Wbar = plan
    assert mean_rate_ebt_lower_bound(EbtPlan(W, Wbar), g) <= mean_rate_ebt_approx(EbtPlan(W, Wbar), g) * (1 + 1e-15)


def test_equivalent_width():
    assert equivalent_conventional_width(EbtPlan(20, 1), 10) == pytest.approx(30 / 11)
    assert round(equivalent_conventional_width(EbtPlan(20, 1), 10), 3) == 2.727
    assert equivalent_conventional_width(EbtPlan(20, 5), 10) == pytest.approx(70 / 11)
    for k in (1, 4, 9):
        for s in (1, 3, 10):
            assert equivalent_conventional_width(EbtPlan(k, k), s) == k
    with pytest.raises(DomainError):
        equivalent_conventional_width(EbtPlan(3, 1), 0)


def test_fig4_conventional_at_wbar1():
    Wc = equivalent_conventional_width(EbtPlan(20, 1), 10)
    assert mean_rate_conventional(Wc, SNR_10DB) == pytest.approx(
        30 / 11 * mean_rate_conventional(1, SNR_10DB), rel=1e-14)
