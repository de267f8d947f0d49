"""Generalized Fourier transform phi(z) = E[exp(i z X_T)] of the RSJD log-return.

Every function accepts scalar or array ``z`` (complex allowed) and returns
an array of the same shape.  Gaussian jumps make phi entire, so no strip
bookkeeping is needed.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from .errors import InputError, MatrixExpError
from .model import JumpLaw, RegimeModel

__all__ = [
    "jump_gft",
    "regime_exponents",
    "gft_matrix",
    "gft_two_state",
    "gft",
    "log_return_moments",
]


def jump_gft(jump: JumpLaw, z):
    """E[exp(i z Y)] for Y ~ N(a, b^2), continued to complex z."""
    z = np.asarray(z, dtype=complex)
    return np.exp(1j * z * jump.a - 0.5 * z * z * jump.b**2)


def regime_exponents(z, model: RegimeModel) -> np.ndarray:
    """theta_j(z) = z xi_j + i z^2 sigma_j^2 / 2 - i lambda_j (phi_j(z) - 1).

    Output has shape ``z.shape + (M,)``.
    """
    z = np.asarray(z, dtype=complex)[..., None]
    xi = model.drift()
    s2 = model.sigma**2
    jumps = np.exp(1j * z * model.jump_mean - 0.5 * z * z * model.jump_std**2)
    return z * xi + 0.5j * z * z * s2 - 1j * model.lam * (jumps - 1.0)


def gft_matrix(z, T: float, model: RegimeModel):
    """1' exp((Q' + i diag(theta(z))) T) e_{alpha0} by dense matrix exponential."""
    if T < 0:
        raise InputError(f"horizon must be >= 0, got {T}")
    z = np.asarray(z, dtype=complex)
    with np.errstate(all="ignore"):
        theta = regime_exponents(z, model)
    M = model.M
    A = np.broadcast_to(model.generator.T.astype(complex), theta.shape + (M,)).copy()
    idx = np.arange(M)
    A[..., idx, idx] += 1j * theta
    with np.errstate(all="ignore"):
        E = expm(A * T)
    out = E[..., :, model.initial_state - 1].sum(axis=-1)
    if not np.all(np.isfinite(out)):
        raise MatrixExpError("matrix exponential overflowed; |z| or T outside the representable range")
    return out


def _exprel(w):
    """(exp(w) - 1) / w, continuous through w = 0."""
    w = np.asarray(w, dtype=complex)
    small = np.abs(w) < 1e-3
    safe = np.where(small, 1.0, w)
    series = 1.0 + w / 2.0 * (1.0 + w / 3.0 * (1.0 + w / 4.0 * (1.0 + w / 5.0)))
    return np.where(small, series, np.expm1(safe) / safe)


def gft_two_state(z, T: float, model: RegimeModel):
    """Closed form for M = 2.

    With theta = theta_1 - theta_2 the regime-1 occupation transform solves a
    2x2 linear ODE whose eigenvalues are the roots of
    y^2 + (q1 + q2 - i theta) y - i theta q2 = 0.  The difference quotient
    (e^{y1 T}(y1 + c) - e^{y2 T}(y2 + c)) / (y1 - y2) is evaluated as
    e^{y2 T} ((y1 + c) T exprel((y1 - y2) T) + 1), which stays exact when the
    roots merge.
    """
    if model.M != 2:
        raise InputError(f"two-state formula needs M = 2, got {model.M}")
    z = np.asarray(z, dtype=complex)
    with np.errstate(all="ignore"):
        return _two_state(z, T, model)


def _two_state(z, T: float, model: RegimeModel):
    th = regime_exponents(z, model)
    th1, th2 = th[..., 0], th[..., 1]
    theta = th1 - th2
    q1 = model.generator[0, 1]
    q2 = model.generator[1, 0]
    B = q1 + q2 - 1j * theta
    C = -1j * theta * q2
    disc = np.sqrt(B * B - 4.0 * C)
    # pick the sign that avoids cancellation, recover the other root from the product
    disc = np.where((np.conj(B) * disc).real < 0, -disc, disc)
    ya = -0.5 * (B + disc)
    yb = np.where(ya == 0, 0.0, C / np.where(ya == 0, 1.0, ya))
    # label so that Re(y1) <= Re(y2): exp((y1 - y2) T) cannot overflow
    swap = ya.real > yb.real
    y1 = np.where(swap, yb, ya)
    y2 = np.where(swap, ya, yb)
    c = q1 + q2 if model.initial_state == 1 else B
    ratio = (y1 + c) * T * _exprel((y1 - y2) * T) + 1.0
    out = np.exp(1j * th2 * T + y2 * T) * ratio
    if not np.all(np.isfinite(out)):
        raise MatrixExpError("two-state transform overflowed")
    return out


def _gft_single(z, T: float, model: RegimeModel):
    return np.exp(1j * regime_exponents(z, model)[..., 0] * T)


def gft(z, T: float, model: RegimeModel):
    """phi_X(z) at horizon T, using the cheapest exact route for the model size."""
    if model.M == 1:
        with np.errstate(over="ignore", invalid="ignore"):
            out = _gft_single(z, T, model)
        if not np.all(np.isfinite(out)):
            raise MatrixExpError("transform overflowed; |z| or T outside the representable range")
        return out
    if model.M == 2:
        return gft_two_state(z, T, model)
    return gft_matrix(z, T, model)


def log_return_moments(T: float, model: RegimeModel, h: float = 1e-3) -> tuple[float, float]:
    """Mean and standard deviation of X_T from central differences of log E[e^{tX}]."""
    cgf_p, cgf_m = np.log(gft(np.array([-1j * h, 1j * h]), T, model).real)
    mean = (cgf_p - cgf_m) / (2 * h)
    var = (cgf_p + cgf_m) / h**2
    return float(mean), float(np.sqrt(max(var, 0.0)))
