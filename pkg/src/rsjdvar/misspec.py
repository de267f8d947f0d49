"""Model-risk experiment: hedge with a GBM fitted to RSJD option prices.

Pipeline: price a put grid under the true Q-model, fit one Black-Scholes
volatility to it, solve the hedge as if GBM were true, and measure under
the true P-model how often the hedged loss exceeds the GBM-optimal VaR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import norm

from .charfun import gft
from .errors import InputError, NumericalError
from .hedge import HedgeSolution, solve_hedge
from .model import MarketSetup, RegimeModel, gbm
from .risk import LossSpec, hedged_loss_tail_prob
from .transform import DEFAULT_QUAD, QuadratureSpec, call_price, put_price

__all__ = [
    "bs_put",
    "bs_call",
    "CalibrationGrid",
    "DEFAULT_STRIKES",
    "synth_grid",
    "calibrate_gbm",
    "MisspecReport",
    "run_misspec",
]

DEFAULT_STRIKES = (0.8, 0.9, 1.0, 1.1, 1.2)  # multiples of S0
DEFAULT_MATURITIES = (0.5, 1.0, 3.0)
SIGMA_BOUNDS = (1e-4, 5.0)
_STARTS = (0.1, 0.3, 0.8)


def _d12(sigma, K, T, S0, r):
    sq = sigma * math.sqrt(T)
    d1 = (math.log(S0 / K) + (r + 0.5 * sigma * sigma) * T) / sq
    return d1, d1 - sq


def bs_put(sigma: float, K: float, T: float, S0: float, r: float) -> float:
    d1, d2 = _d12(sigma, K, T, S0, r)
    return K * math.exp(-r * T) * norm.cdf(-d2) - S0 * norm.cdf(-d1)


def bs_call(sigma: float, K: float, T: float, S0: float, r: float) -> float:
    d1, d2 = _d12(sigma, K, T, S0, r)
    return S0 * norm.cdf(d1) - K * math.exp(-r * T) * norm.cdf(d2)


@dataclass(frozen=True)
class CalibrationGrid:
    strikes: tuple[float, ...]
    maturities: tuple[float, ...]
    prices: np.ndarray  # shape (len(maturities), len(strikes))
    instrument: str = "put"

    def __post_init__(self):
        prices = np.array(self.prices, dtype=float)
        prices.setflags(write=False)
        object.__setattr__(self, "prices", prices)
        if self.instrument not in ("put", "call"):
            raise InputError(f"instrument must be 'put' or 'call', got {self.instrument!r}")
        if prices.shape != (len(self.maturities), len(self.strikes)):
            raise InputError(f"price matrix shape {prices.shape} does not match the grid")
        if not np.all(np.isfinite(prices)) or np.any(prices < 0):
            raise InputError("grid prices must be finite and non-negative")


def synth_grid(
    q_model: RegimeModel,
    S0: float,
    strikes: Sequence[float] | None = None,
    maturities: Sequence[float] = DEFAULT_MATURITIES,
    instrument: str = "put",
    quad: QuadratureSpec = DEFAULT_QUAD,
) -> CalibrationGrid:
    """Price a strike x maturity grid under ``q_model``; strikes default to 0.8..1.2 S0."""
    strikes = tuple(float(k) for k in (strikes if strikes is not None else np.multiply(DEFAULT_STRIKES, S0)))
    pricer = put_price if instrument == "put" else call_price
    prices = [[pricer(K, T, q_model, S0, quad) for K in strikes] for T in maturities]
    return CalibrationGrid(strikes, tuple(float(t) for t in maturities), np.array(prices), instrument)


def calibrate_gbm(grid: CalibrationGrid, S0: float, r: float) -> float:
    """Least-squares Black-Scholes volatility over the whole grid."""
    pricer = bs_put if grid.instrument == "put" else bs_call
    cells = [(K, T, grid.prices[i, j]) for i, T in enumerate(grid.maturities) for j, K in enumerate(grid.strikes)]

    def sse(sigma):
        return sum((pricer(sigma, K, T, S0, r) - p) ** 2 for K, T, p in cells)

    # coarse log grid (plus the fixed starts) picks the basin, bounded Brent polishes it
    lo, hi = SIGMA_BOUNDS
    coarse = np.unique(np.concatenate([np.geomspace(lo, hi, 80), _STARTS]))
    values = np.array([sse(s) for s in coarse])
    if not np.all(np.isfinite(values)):
        raise NumericalError("calibration objective is not finite")
    i = int(np.argmin(values))
    a, b = coarse[max(i - 1, 0)], coarse[min(i + 1, coarse.size - 1)]
    res = minimize_scalar(sse, bounds=(a, b), method="bounded", options={"xatol": 1e-12})
    return float(res.x)


@dataclass(frozen=True)
class MisspecReport:
    sigma_hat: float
    mu_hat: float
    gbm_strategy: HedgeSolution
    true_strategy: HedgeSolution
    beta: float
    premium_paid: float


def run_misspec(
    p_model: RegimeModel,
    q_model: RegimeModel,
    setup: MarketSetup,
    strikes: Sequence[float] | None = None,
    maturities: Sequence[float] | None = None,
    *,
    gbm_drift: str = "moment",
    premium: str = "true",
    quad: QuadratureSpec = DEFAULT_QUAD,
) -> MisspecReport:
    """Hedge under a calibrated GBM and measure the exceedance probability under the truth.

    ``gbm_drift="moment"`` sets the GBM real-world drift so E[S_T] matches the
    true P-model; ``"rate"`` uses the riskless rate.  ``premium="true"``
    charges the true-model put price for the GBM strategy, ``"gbm"`` the
    Black-Scholes price the hedger believes in.
    """
    if gbm_drift not in ("moment", "rate") or premium not in ("true", "gbm"):
        raise InputError("gbm_drift must be 'moment' or 'rate'; premium must be 'true' or 'gbm'")
    S0, r, T = setup.S0, setup.r, setup.T
    grid = synth_grid(q_model, S0, strikes, maturities or (T,), quad=quad)
    sigma_hat = calibrate_gbm(grid, S0, r)
    if gbm_drift == "moment":
        mu_hat = math.log(float(gft(-1j, T, p_model).real)) / T
    else:
        mu_hat = r
    gbm_p = gbm(sigma_hat, mu_hat)
    gbm_q = gbm(sigma_hat, mu_hat, r=r)
    gbm_sol = solve_hedge(setup, gbm_p, gbm_q, quad)
    true_sol = solve_hedge(setup, p_model, q_model, quad)
    if gbm_sol.fraction == 0:
        paid = 0.0
    elif premium == "true":
        paid = put_price(gbm_sol.strike, T, q_model, S0, quad)
    else:
        paid = gbm_sol.premium
    loss = LossSpec(setup, gbm_sol.fraction, gbm_sol.strike if gbm_sol.fraction else S0, paid)
    beta = hedged_loss_tail_prob(gbm_sol.hedged_var, loss, p_model, quad)
    if not 0.0 <= beta <= 1.0:
        raise NumericalError(f"exceedance probability {beta} outside [0, 1]")
    return MisspecReport(sigma_hat, mu_hat, gbm_sol, true_sol, beta, paid)
