from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.optimize import brentq

from oracles import bs_put, lognormal_conditional_mean, lognormal_quantile
from rsjdvar.errors import ExistenceViolated, InputError, TargetUnattainable
from rsjdvar.hedge import (
    Boundary,
    efficient_frontier,
    foc_residual,
    min_cost_for_target,
    optimal_strike,
    solve_hedge,
)
from rsjdvar.model import MarketSetup, apply_measure_change, gbm, identity_measure_change
from rsjdvar.risk import LossSpec, hedged_var
from rsjdvar.transform import put_price

R = 0.005


def _gbm_pair(sigma=0.25, r=0.03, mu=None):
    p = gbm(sigma, r if mu is None else mu)
    return p, apply_measure_change(p, identity_measure_change(1), r)


def test_zero_budget_reports_strike_without_hedging(table1):
    p, q = table1
    sol = solve_hedge(MarketSetup(100.0, R, 1.0, 0.01, 0.0), p, q)
    assert sol.boundary is Boundary.NO_BUDGET
    assert sol.fraction == 0.0 and sol.reduction == 0.0
    assert sol.hedged_var == sol.unhedged_var
    assert sol.strike == pytest.approx(55.5928, abs=5e-5)


def test_published_row(table1):
    p, q = table1
    sol = solve_hedge(MarketSetup(100.0, R, 1.0, 0.01, 0.1), p, q)
    assert sol.boundary is Boundary.INTERIOR
    assert sol.strike == pytest.approx(55.5928, abs=5e-5)
    assert sol.fraction == pytest.approx(0.6165, abs=5e-5)
    assert sol.hedged_var == pytest.approx(47.1767, abs=5e-5)


def test_strike_matches_lognormal_conditional_mean():
    p, q = _gbm_pair(0.25, 0.03)
    qa = lognormal_quantile(0.01, 100, 1, 0.03, 0.25)
    K = optimal_strike(qa, 1.0, q, 100.0)
    assert lognormal_conditional_mean(K, 100, 1, 0.03, 0.25) == pytest.approx(qa, rel=1e-8)
    # first-order condition written with closed-form put and probability
    assert abs(foc_residual(K, qa, 1.0, q, 100.0)) < 1e-8 * 100
    assert bs_put(100, K, 1, 0.03, 0.25) > 0


def test_residual_changes_sign_once(table2):
    q = table2[1]
    setup = MarketSetup(100.0, R, 1.0, 0.01)
    qa = solve_hedge(setup, *table2).quantile
    K = optimal_strike(qa, 1.0, q, 100.0)
    grid = np.linspace(qa * 1.001, 3 * K, 40)
    signs = np.sign([foc_residual(k, qa, 1.0, q, 100.0) for k in grid])
    assert np.all(signs[grid < K * 0.999] > 0) and np.all(signs[grid > K * 1.001] < 0)


def test_strike_does_not_depend_on_budget(table1):
    p, q = table1
    strikes = [solve_hedge(MarketSetup(100.0, R, 1.0, 0.01, c), p, q).strike for c in (0.0, 0.02, 0.1, 0.15)]
    assert max(strikes) - min(strikes) < 1e-9


def test_strike_is_a_local_minimum_of_hedged_var(table1):
    p, q = table1
    setup = MarketSetup(100.0, R, 1.0, 0.01, 0.1)
    sol = solve_hedge(setup, p, q)

    def var_at(K):
        prem = put_price(K, 1.0, q, 100.0)
        return hedged_var(LossSpec(setup, setup.C / prem, K, prem), sol.quantile)

    for dK in (1e-2, 1e-1, 1.0):
        assert var_at(sol.strike - dK) > sol.hedged_var
        assert var_at(sol.strike + dK) > sol.hedged_var


def test_existence_violation():
    # drift far above the rate pushes the quantile past the forward
    p, q = _gbm_pair(0.05, 0.0, mu=1.0)
    sol = solve_hedge(MarketSetup(100.0, 0.0, 1.0, 0.01, 1.0), p, q)
    assert sol.boundary is Boundary.INFEASIBLE
    assert math.isnan(sol.strike) and sol.fraction == 0.0
    with pytest.raises(ExistenceViolated):
        optimal_strike(sol.quantile, 1.0, q, 100.0)


@pytest.mark.parametrize("sigma, floor", [(0.2, 2.0), (0.7, 10.0)])
def test_strike_blows_up_as_quantile_nears_forward(sigma, floor):
    q = _gbm_pair(sigma, 0.05)[1]
    qa = 100 * math.exp(0.05) - 1e-2  # gap 1e-4 S0
    K = optimal_strike(qa, 1.0, q, 100.0)
    oracle = brentq(lambda k: lognormal_conditional_mean(k, 100, 1, 0.05, sigma) - qa, qa * 1.0001, 1e5)
    assert K == pytest.approx(oracle, rel=1e-9)
    assert K > floor * 100
    assert optimal_strike(100 * math.exp(0.05) - 1.0, 1.0, q, 100.0) < K


def test_scale_equivariance(table2):
    p, q = table2
    base = solve_hedge(MarketSetup(100.0, R, 1.0, 0.01, 0.005), p, q)
    big = solve_hedge(MarketSetup(1000.0, R, 1.0, 0.01, 0.05), p, q)
    assert big.strike == pytest.approx(10 * base.strike, rel=1e-9)
    assert big.fraction == pytest.approx(base.fraction, rel=1e-9)
    assert big.hedged_var == pytest.approx(10 * base.hedged_var, rel=1e-9)


def test_capped_budget_moves_the_strike(table1):
    p, q = table1
    premium = solve_hedge(MarketSetup(100.0, R, 1.0, 0.01), p, q).premium
    sol = solve_hedge(MarketSetup(100.0, R, 1.0, 0.01, 2 * premium), p, q)
    assert sol.boundary is Boundary.FRACTION_CAPPED
    assert sol.fraction == 1.0
    assert put_price(sol.strike, 1.0, q, 100.0) == pytest.approx(2 * premium, rel=1e-10)
    interior = solve_hedge(MarketSetup(100.0, R, 1.0, 0.01, premium * (1 - 1e-9)), p, q)
    assert sol.hedged_var < interior.hedged_var


def test_pricing_model_must_match_setup(table1):
    p, q = table1
    with pytest.raises(InputError):
        solve_hedge(MarketSetup(100.0, 0.02, 1.0, 0.01, 0.1), p, q)
    with pytest.raises(InputError):
        solve_hedge(MarketSetup(100.0, R, 1.0, 0.01, 0.1), p, p)


def test_frontier_starts_at_the_unhedged_var(table1):
    p, q = table1
    setup = MarketSetup(100.0, R, 1.0, 0.01)
    fr = efficient_frontier(setup, p, q, [0.0, 0.05, 0.1])
    assert fr.points[0].boundary is Boundary.NO_BUDGET
    assert fr.points[0].var == fr.intercept
    for pt in fr.points:
        assert pt.var == pytest.approx(fr.line(pt.budget), abs=1e-9)
    with pytest.raises(InputError):
        efficient_frontier(setup, p, q, [0.1, 0.0])


def test_min_cost_edges(table1):
    p, q = table1
    setup = MarketSetup(100.0, R, 1.0, 0.01)
    sol = solve_hedge(setup, p, q)
    C, K, h = min_cost_for_target(setup, p, q, sol.unhedged_var)
    assert C == pytest.approx(0.0, abs=1e-12) and h == pytest.approx(0.0, abs=1e-12)
    assert K == pytest.approx(sol.strike, rel=1e-12)
    with pytest.raises(TargetUnattainable):
        min_cost_for_target(setup, p, q, 0.0)
    with pytest.raises(InputError):
        min_cost_for_target(setup, p, q, sol.unhedged_var + 1.0)


def test_min_cost_inverts_the_frontier(table2):
    p, q = table2
    setup = MarketSetup(100.0, R, 1.0, 0.01)
    fr = efficient_frontier(setup, p, q, [0.0])
    target = fr.intercept - 5.0
    C, K, h = min_cost_for_target(setup, p, q, target)
    assert fr.line(C) == pytest.approx(target, rel=1e-12)
    assert solve_hedge(MarketSetup(100.0, R, 1.0, 0.01, C), p, q).hedged_var == pytest.approx(target, rel=1e-9)
