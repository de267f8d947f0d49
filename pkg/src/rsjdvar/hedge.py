"""Budget-constrained VaR minimisation with a single put.

For a budget C the manager buys h = C / Put(K) puts.  The optimal strike
solves Put(K) = (K - q) dPut/dK, i.e. E^Q[S_T | S_T <= K] = q, and does not
depend on C, so the minimal VaR is affine in the budget.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import BudgetExceedsAnyPut, ExistenceViolated, InputError, RootFindingError, TargetUnattainable
from .model import MarketSetup, RegimeModel
from .risk import LossSpec, hedged_var, quantile
from .transform import DEFAULT_QUAD, QuadratureSpec, put_price, put_strike_derivative

__all__ = [
    "Boundary",
    "HedgeSolution",
    "FrontierPoint",
    "Frontier",
    "optimal_strike",
    "foc_residual",
    "solve_hedge",
    "efficient_frontier",
    "min_cost_for_target",
]

FOC_TOL = 1e-8  # first-order residual, relative to S0
_K_MAX = 1e3  # strike search ceiling, in units of S0
_RTOL = 4 * np.finfo(float).eps


class Boundary(str, enum.Enum):
    INTERIOR = "Interior"
    FRACTION_CAPPED = "FractionCapped"
    INFEASIBLE = "Infeasible"
    NO_BUDGET = "NoBudget"


@dataclass(frozen=True)
class HedgeSolution:
    strike: float
    fraction: float
    hedged_var: float
    unhedged_var: float
    reduction: float
    boundary: Boundary
    quantile: float
    premium: float  # price of one put at ``strike``


def foc_residual(K: float, q_alpha: float, T: float, q_model: RegimeModel, S0: float, quad=DEFAULT_QUAD) -> float:
    """Put(K) - (K - q) dPut/dK; positive left of the optimum, negative right of it."""
    return put_price(K, T, q_model, S0, quad) - (K - q_alpha) * put_strike_derivative(K, T, q_model, S0, quad)


def _check_existence(q_alpha: float, T: float, q_model: RegimeModel, S0: float) -> None:
    forward = S0 * math.exp(q_model.rate * T)
    if not q_alpha < forward:
        raise ExistenceViolated(
            f"quantile {q_alpha:.6g} is not below E^Q[S_T] = {forward:.6g}; no optimal strike exists"
        )


def optimal_strike(
    q_alpha: float, T: float, q_model: RegimeModel, S0: float, quad: QuadratureSpec = DEFAULT_QUAD
) -> float:
    """Strike solving the first-order condition, searched on (q, 1e3 * S0]."""
    _check_existence(q_alpha, T, q_model, S0)

    def F(K):
        return foc_residual(K, q_alpha, T, q_model, S0, quad)

    lo = q_alpha * (1 + 1e-9)
    hi = max(2.0 * q_alpha, S0 * math.exp(q_model.rate * T))
    while F(hi) > 0:
        lo = hi
        hi *= 2.0
        if hi > _K_MAX * S0:
            raise ExistenceViolated(
                f"first-order condition keeps its sign up to K = {_K_MAX:g} * S0; quantile too close to the forward"
            )
    K = brentq(F, lo, hi, xtol=1e-13 * S0, rtol=_RTOL, maxiter=200)
    if abs(F(K)) >= FOC_TOL * S0:
        raise RootFindingError(f"optimal strike residual {F(K):.3g} above {FOC_TOL} * S0")
    return K


def _check_rates(setup: MarketSetup, q_model: RegimeModel) -> None:
    if not q_model.risk_neutral:
        raise InputError("hedging needs a risk-neutral pricing model")
    if abs(q_model.rate - setup.r) > 1e-14:
        raise InputError(f"pricing model rate {q_model.rate} differs from setup rate {setup.r}")


def _strike_for_premium(C: float, K_start: float, T: float, q_model: RegimeModel, S0: float, quad) -> float:
    """K with Put(K) = C; Put is increasing in K."""
    lo, hi = K_start, 2.0 * K_start
    while put_price(hi, T, q_model, S0, quad) < C:
        lo, hi = hi, 2.0 * hi
        if hi > _K_MAX * S0:
            raise BudgetExceedsAnyPut(f"budget {C:g} buys a full put at every strike below {_K_MAX:g} * S0")
    return brentq(lambda K: put_price(K, T, q_model, S0, quad) - C, lo, hi, xtol=1e-13 * S0, rtol=_RTOL)


def solve_hedge(
    setup: MarketSetup, p_model: RegimeModel, q_model: RegimeModel, quad: QuadratureSpec = DEFAULT_QUAD
) -> HedgeSolution:
    _check_rates(setup, q_model)
    S0, T = setup.S0, setup.T
    disc = math.exp(-setup.r * T)
    q = quantile(setup.alpha, T, p_model, S0, quad)
    var_u = S0 - disc * q
    try:
        K = optimal_strike(q, T, q_model, S0, quad)
    except ExistenceViolated:
        return HedgeSolution(math.nan, 0.0, var_u, var_u, 0.0, Boundary.INFEASIBLE, q, math.nan)
    premium = put_price(K, T, q_model, S0, quad)
    if setup.C == 0:
        return HedgeSolution(K, 0.0, var_u, var_u, 0.0, Boundary.NO_BUDGET, q, premium)
    h = setup.C / premium
    boundary = Boundary.INTERIOR
    if h > 1.0:
        boundary = Boundary.FRACTION_CAPPED
        K = _strike_for_premium(setup.C, K, T, q_model, S0, quad)
        h, premium = 1.0, setup.C
    var_h = hedged_var(LossSpec(setup, h, K, premium), q)
    return HedgeSolution(K, h, var_h, var_u, 1.0 - var_h / var_u, boundary, q, premium)


@dataclass(frozen=True)
class FrontierPoint:
    budget: float
    var: float
    boundary: Boundary


@dataclass(frozen=True)
class Frontier:
    """Pointwise solves plus the closed-form line VaR = intercept + slope * C."""

    points: list[FrontierPoint]
    strike: float
    intercept: float
    slope: float

    def line(self, C: float) -> float:
        return self.intercept + self.slope * C


def _frontier_slope(K: float, q: float, premium: float, disc: float) -> float:
    return 1.0 - disc * (K - q) / premium


def efficient_frontier(
    setup: MarketSetup,
    p_model: RegimeModel,
    q_model: RegimeModel,
    budgets,
    quad: QuadratureSpec = DEFAULT_QUAD,
) -> Frontier:
    budgets = [float(c) for c in budgets]
    if any(c < 0 for c in budgets) or budgets != sorted(budgets):
        raise InputError("budgets must be non-negative and sorted ascending")
    sols = [solve_hedge(_with_budget(setup, c), p_model, q_model, quad) for c in budgets]
    points = [FrontierPoint(c, s.hedged_var, s.boundary) for c, s in zip(budgets, sols)]
    ref = sols[0]
    if ref.boundary is Boundary.INFEASIBLE:
        return Frontier(points, math.nan, ref.unhedged_var, 0.0)
    if ref.boundary is Boundary.FRACTION_CAPPED:
        K = optimal_strike(ref.quantile, setup.T, q_model, setup.S0, quad)
        premium = put_price(K, setup.T, q_model, setup.S0, quad)
    else:
        K, premium = ref.strike, ref.premium
    slope = _frontier_slope(K, ref.quantile, premium, math.exp(-setup.r * setup.T))
    return Frontier(points, K, ref.unhedged_var, slope)


def _with_budget(setup: MarketSetup, C: float) -> MarketSetup:
    return MarketSetup(setup.S0, setup.r, setup.T, setup.alpha, C)


def min_cost_for_target(
    setup: MarketSetup,
    p_model: RegimeModel,
    q_model: RegimeModel,
    target_var: float,
    quad: QuadratureSpec = DEFAULT_QUAD,
) -> tuple[float, float, float]:
    """Cheapest (C, K, h) reaching VaR ``target_var`` on the interior frontier."""
    _check_rates(setup, q_model)
    S0, T = setup.S0, setup.T
    disc = math.exp(-setup.r * T)
    q = quantile(setup.alpha, T, p_model, S0, quad)
    var_u = S0 - disc * q
    K = optimal_strike(q, T, q_model, S0, quad)
    premium = put_price(K, T, q_model, S0, quad)
    if target_var > var_u:
        raise InputError(f"target VaR {target_var:.6g} exceeds the unhedged VaR {var_u:.6g}")
    slope = _frontier_slope(K, q, premium, disc)
    floor = var_u + slope * premium
    if target_var < floor:
        raise TargetUnattainable(f"target VaR {target_var:.6g} is below the full-hedge floor {floor:.6g}")
    C = (target_var - var_u) / slope
    return C, K, C / premium
