"""Fourier inversion: put/call prices, CDF of S_T, and dPut/dK.

Prices integrate along Im z = nu - 1 with nu > 1, probabilities along
Im z = nu with nu > 0 (or -nu above S0).  Gaussian jumps make the transform entire, so the
result does not depend on nu beyond quadrature noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .charfun import gft
from .errors import ContourError, InputError, QuadratureError
from .model import RegimeModel

__all__ = [
    "QuadratureSpec",
    "DEFAULT_QUAD",
    "integrate_halfline",
    "put_price",
    "call_price",
    "tail_prob",
    "put_strike_derivative",
]

# pre-clamp slack tolerated on probabilities before declaring a contour error
PROB_SLACK = 1e-6


@dataclass(frozen=True)
class QuadratureSpec:
    nu_price: float = 1.5
    nu_prob: float = 1.0
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    truncation_tol: float = 1e-14
    max_intervals: int = 10_000

    def __post_init__(self):
        if not self.nu_price > 1:
            raise InputError(f"price contour needs nu > 1, got {self.nu_price}")
        if not self.nu_prob > 0:
            raise InputError(f"probability contour needs nu > 0, got {self.nu_prob}")
        for name in ("rel_tol", "abs_tol", "truncation_tol"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be > 0")
        if self.max_intervals < 1:
            raise InputError("max_intervals must be >= 1")


DEFAULT_QUAD = QuadratureSpec()

# Gauss-Lobatto 4-point rule and its 7-point Kronrod extension on [-1, 1]
_X7 = np.array([-1.0, -math.sqrt(2 / 3), -1 / math.sqrt(5), 0.0, 1 / math.sqrt(5), math.sqrt(2 / 3), 1.0])
_W7 = np.array([11 / 210, 72 / 245, 125 / 294, 16 / 35, 125 / 294, 72 / 245, 11 / 210])
_W4 = np.array([1 / 6, 0.0, 5 / 6, 0.0, 5 / 6, 0.0, 1 / 6])
_EPS = np.finfo(float).eps


def _truncation_point(scale: float, rate: float, tol: float) -> float:
    """Smallest U with scale * exp(-rate U^2) / (2 rate U) <= tol (tail bound)."""
    if scale <= 0:
        return 1.0
    U = math.sqrt(max(math.log(scale / tol), 0.0) / rate) if scale > tol else 1.0
    for _ in range(4):
        U = max(1.0, math.sqrt(max(math.log(scale / (tol * 2 * rate * U)), 0.0) / rate))
    return U


def _search_truncation(f: Callable, tol: float) -> float:
    """Double U until |f| on [U, 2U] times the width is below ``tol``."""
    U = 1.0
    for _ in range(60):
        u = np.linspace(U, 2 * U, 33)
        if np.max(np.abs(f(u))) * U < tol:
            return U
        U *= 2
    raise QuadratureError("integrand does not decay; no truncation point found")


def integrate_halfline(
    f: Callable[[np.ndarray], np.ndarray],
    quad: QuadratureSpec = DEFAULT_QUAD,
    *,
    envelope: tuple[float, float] | None = None,
) -> float:
    """Re of the integral of ``f`` over [0, inf) by adaptive Gauss-Lobatto.

    ``f`` is called with a 1-D array of abscissae and must be vectorised.
    ``envelope=(scale, rate)`` asserts |f(u)| <= scale * exp(-rate u^2) and
    sets the truncation point from the gaussian tail bound; without it the
    truncation point is found by doubling.
    """
    if envelope is not None and envelope[1] > 0:
        U = _truncation_point(envelope[0], envelope[1], quad.truncation_tol)
    else:
        U = _search_truncation(f, quad.truncation_tol)

    n0 = 32
    edges = np.linspace(0.0, U, n0 + 1)
    lo, hi = edges[:-1], edges[1:]
    done_sum = 0.0
    done_abs = 0.0
    intervals = n0
    while True:
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        x = mid[:, None] + half[:, None] * _X7
        fx = np.asarray(f(x.ravel()), dtype=complex).reshape(x.shape).real
        if not np.all(np.isfinite(fx)):
            raise QuadratureError("integrand returned non-finite values")
        k7 = half * (fx @ _W7)
        l4 = half * (fx @ _W4)
        absint = half * (np.abs(fx) @ _W7)
        # |K7 - L4| bounds the error of the 4-point rule; rescale it to the
        # 7-point result the way QUADPACK does for its Kronrod pairs
        asc = half * (np.abs(fx - (k7 / (2 * half))[:, None]) @ _W7)
        raw = np.abs(k7 - l4)
        with np.errstate(invalid="ignore", divide="ignore"):
            err = np.where(asc > 0, asc * np.minimum(1.0, (200.0 * raw / np.where(asc > 0, asc, 1.0)) ** 1.5), raw)
        total = done_sum + k7.sum()
        tol = max(quad.abs_tol, quad.rel_tol * abs(total), 50 * _EPS * (done_abs + absint.sum()))
        ok = err <= tol * (hi - lo) / U
        # panels at the resolution floor cannot be refined further
        ok |= half <= 4 * _EPS * np.maximum(1.0, np.abs(mid))
        done_sum += k7[ok].sum()
        done_abs += absint[ok].sum()
        if ok.all():
            return float(done_sum)
        lo, hi, mid = lo[~ok], hi[~ok], mid[~ok]
        intervals += lo.size
        if intervals > quad.max_intervals:
            raise QuadratureError(
                f"adaptive quadrature exceeded {quad.max_intervals} intervals (U={U:.3g})"
            )
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])


def _damping_rate(model: RegimeModel, T: float) -> float:
    return 0.5 * float(model.sigma.min()) ** 2 * T


def _require_q(model: RegimeModel) -> float:
    if not model.risk_neutral:
        raise InputError("option prices need a risk-neutral model")
    return model.rate


def put_price(K: float, T: float, q_model: RegimeModel, S0: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """European put e^{-rT} E^Q[(K - S_T)^+] by Fourier inversion."""
    r = _require_q(q_model)
    if not (K > 0 and S0 > 0 and T > 0):
        raise InputError(f"put needs K, S0, T > 0 (got K={K}, S0={S0}, T={T})")
    nu = quad.nu_price
    m = math.log(K / S0)
    pref = math.exp(-r * T) * S0 * math.exp(nu * m) / math.pi
    shift = 1j * (nu - 1.0)

    def f(u):
        den = nu * nu - u * u - nu + 1j * u * (1.0 - 2.0 * nu)
        return pref * np.exp(-1j * u * m) * gft(u + shift, T, q_model) / den

    bound = float(gft(shift, T, q_model).real)
    value = integrate_halfline(f, quad, envelope=(pref * bound / (nu * (nu - 1.0)), _damping_rate(q_model, T)))
    return min(max(value, 0.0), math.exp(-r * T) * K)


def call_price(K: float, T: float, q_model: RegimeModel, S0: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Call from put-call parity; exact for a martingale Q-model."""
    r = _require_q(q_model)
    return put_price(K, T, q_model, S0, quad) + S0 - math.exp(-r * T) * K


def tail_prob(v: float, T: float, model: RegimeModel, S0: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """P(S_T < v) under the model's own measure."""
    if not (v > 0 and S0 > 0 and T > 0):
        raise InputError(f"tail probability needs v, S0, T > 0 (got v={v}, S0={S0}, T={T})")
    m = math.log(v / S0)
    # above S0 the mirrored contour keeps exp(nu m) small; crossing the pole
    # at z = 0 turns the integral into P(S_T < v) - 1
    nu = quad.nu_prob if m <= 0 else -quad.nu_prob
    pref = math.exp(nu * m) / math.pi
    shift = 1j * nu

    def f(u):
        return pref * np.exp(-1j * u * m) * gft(u + shift, T, model) / (nu - 1j * u)

    bound = float(gft(shift, T, model).real)
    p = integrate_halfline(f, quad, envelope=(pref * bound / abs(nu), _damping_rate(model, T)))
    if nu < 0:
        p += 1.0
    if not -PROB_SLACK <= p <= 1 + PROB_SLACK:
        raise ContourError(f"inverted probability {p:.3g} outside [0, 1]; contour nu={nu} is unsuitable")
    return min(max(p, 0.0), 1.0)


def put_strike_derivative(
    K: float, T: float, q_model: RegimeModel, S0: float, quad: QuadratureSpec = DEFAULT_QUAD
) -> float:
    """dPut/dK = e^{-rT} Q(S_T <= K)."""
    r = _require_q(q_model)
    return math.exp(-r * T) * tail_prob(K, T, q_model, S0, quad)
