"""Quantiles of S_T, unhedged VaR, and the hedged-loss distribution.

Losses are measured at time 0: the unhedged position loses
``S0 - exp(-rT) S_T`` and a position hedged with a fraction ``h`` of a put
struck at ``K`` loses ``g(unhedged)`` where
``g(u) = u - h (u - Kbar)^+ + h put0`` and ``Kbar = S0 - exp(-rT) K``.

Throughout, the loss-relevant quantile at level ``alpha`` is the lower
tail point ``q`` with ``P(S_T < q) = alpha`` (alpha is small, e.g. 0.01).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.stats import norm

from .charfun import log_return_moments
from .errors import InputError, RootFindingError
from .model import MarketSetup, RegimeModel
from .transform import DEFAULT_QUAD, QuadratureSpec, tail_prob

__all__ = [
    "LossSpec",
    "quantile",
    "var_unhedged",
    "g_transform",
    "g_inverse",
    "hedged_var",
    "hedged_loss_tail_prob",
]

QUANTILE_RESIDUAL = 1e-10
_LOG_BOUND = math.log(1e8)
_RTOL = 4 * np.finfo(float).eps


@dataclass(frozen=True)
class LossSpec:
    setup: MarketSetup
    h: float
    K: float
    put0: float

    def __post_init__(self):
        if not 0.0 <= self.h <= 1.0:
            raise InputError(f"hedge fraction must lie in [0, 1], got {self.h}")
        if not self.K > 0:
            raise InputError(f"strike must be > 0, got {self.K}")
        if not self.put0 >= 0:
            raise InputError(f"put premium must be >= 0, got {self.put0}")

    @property
    def discount(self) -> float:
        return math.exp(-self.setup.r * self.setup.T)

    @property
    def kbar(self) -> float:
        return self.setup.S0 - self.discount * self.K


def quantile(
    alpha: float, T: float, model: RegimeModel, S0: float, quad: QuadratureSpec = DEFAULT_QUAD
) -> float:
    """Level q with P(S_T < q) = alpha under ``model``'s measure.

    The search runs on x = log(q / S0).  It starts at the gaussian guess
    mean + sd * z_alpha of the log-return, steps away from it by sd / 4,
    doubling each time, until the CDF changes sign (never leaving
    [1e-8, 1e8] * S0), and then polishes with Brent's method.
    """
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must lie in (0, 1), got {alpha}")
    seen: dict[float, float] = {}

    def resid(x):
        if x not in seen:
            seen[x] = tail_prob(S0 * math.exp(x), T, model, S0, quad) - alpha
        return seen[x]

    mean, sd = log_return_moments(T, model)
    sd = max(sd, 1e-8)
    a = min(max(mean + sd * float(norm.ppf(alpha)), -_LOG_BOUND), _LOG_BOUND)
    fa = resid(a)
    if fa == 0:
        return S0 * math.exp(a)
    direction = -1.0 if fa > 0 else 1.0
    step = 0.25 * sd
    while True:
        b = min(max(a + direction * step, -_LOG_BOUND), _LOG_BOUND)
        fb = resid(b)
        if fb == 0:
            return S0 * math.exp(b)
        if (fb > 0) != (fa > 0):
            break
        if b == a:
            side = "below 1e8" if direction > 0 else "above 1e-8"
            raise RootFindingError(f"no bracket for the {alpha} quantile {side} * S0")
        a, fa = b, fb
        step *= 2.0
    lo, hi = (a, b) if a < b else (b, a)
    x = brentq(resid, lo, hi, xtol=1e-14, rtol=_RTOL, maxiter=200)
    if abs(resid(x)) >= QUANTILE_RESIDUAL:
        raise RootFindingError(f"quantile residual {resid(x):.3g} above {QUANTILE_RESIDUAL}")
    return S0 * math.exp(x)


def var_unhedged(setup: MarketSetup, p_model: RegimeModel, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    q = quantile(setup.alpha, setup.T, p_model, setup.S0, quad)
    return setup.S0 - math.exp(-setup.r * setup.T) * q


def g_transform(u: float, loss: LossSpec) -> float:
    return u - loss.h * max(u - loss.kbar, 0.0) + loss.h * loss.put0


def g_inverse(v: float, loss: LossSpec) -> float | None:
    """Smallest u with g(u) >= v; ``None`` when v exceeds the cap of a full hedge."""
    w = v - loss.h * loss.put0
    if w <= loss.kbar:
        return w
    if loss.h >= 1.0:
        return None
    return loss.kbar + (w - loss.kbar) / (1.0 - loss.h)


def hedged_var(loss: LossSpec, q_alpha: float) -> float:
    """VaR of the hedged loss, given the alpha-quantile of S_T under P."""
    s = loss.setup
    var_u = s.S0 - loss.discount * q_alpha
    return var_u + loss.h * loss.put0 - loss.discount * loss.h * max(loss.K - q_alpha, 0.0)


def hedged_loss_tail_prob(
    v: float, loss: LossSpec, p_model: RegimeModel, quad: QuadratureSpec = DEFAULT_QUAD
) -> float:
    """P(L^{h,K} >= v) = P(S_T <= e^{rT} (S0 - g^{-1}(v)))."""
    w = g_inverse(v, loss)
    if w is None:
        return 0.0
    s = loss.setup
    level = (s.S0 - w) / loss.discount
    if level <= 0:
        return 0.0
    return tail_prob(level, s.T, p_model, s.S0, quad)
