"""Regime-switching jump-diffusion parameters under P and Q.

A model is an immutable value: an M-state generator, one ``RegimeParams``
per state, the starting regime (1-based) and a measure tag.  Under the
historical measure the log drift of regime i is ``mu_i - sigma_i**2/2``;
under a risk-neutral tag the drift is always rebuilt from the martingale
condition, ``r - sigma_i**2/2 - lambda_i * kappa_i``, and ``mu`` is ignored.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Sequence, Union

import numpy as np

from .errors import InputError, ModelError

__all__ = [
    "JumpLaw",
    "RegimeParams",
    "Historical",
    "RiskNeutral",
    "HISTORICAL",
    "RegimeModel",
    "MeasureChangeSpec",
    "MarketSetup",
    "validate",
    "check",
    "kappa",
    "apply_measure_change",
    "girsanov_shift",
    "market_price_of_risk",
    "identity_measure_change",
    "gbm",
    "merton",
    "two_state",
    "model_from_dict",
    "model_to_dict",
    "load_model",
]

# Row-sum slack accepted by ``validate``; measure changes rebalance exactly.
ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class JumpLaw:
    """Gaussian law of the log jump size, N(a, b**2)."""

    a: float = 0.0
    b: float = 0.0


NO_JUMP = JumpLaw()


@dataclass(frozen=True)
class RegimeParams:
    mu: float
    sigma: float
    lam: float = 0.0
    jump: JumpLaw = NO_JUMP


@dataclass(frozen=True)
class Historical:
    pass


@dataclass(frozen=True)
class RiskNeutral:
    r: float


HISTORICAL = Historical()
Measure = Union[Historical, RiskNeutral]


def _freeze(a: Any) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RegimeModel:
    generator: np.ndarray
    regimes: tuple[RegimeParams, ...]
    initial_state: int = 1
    measure: Measure = HISTORICAL

    def __post_init__(self):
        gen = _freeze(self.generator)
        if gen.ndim == 0:
            gen = _freeze(gen.reshape(1, 1))
        object.__setattr__(self, "generator", gen)
        object.__setattr__(self, "regimes", tuple(self.regimes))

    @property
    def M(self) -> int:
        return len(self.regimes)

    @property
    def risk_neutral(self) -> bool:
        return isinstance(self.measure, RiskNeutral)

    @property
    def rate(self) -> float:
        if not self.risk_neutral:
            raise InputError("model is historical and carries no rate")
        return self.measure.r

    @cached_property
    def sigma(self) -> np.ndarray:
        return _freeze([p.sigma for p in self.regimes])

    @cached_property
    def lam(self) -> np.ndarray:
        return _freeze([p.lam for p in self.regimes])

    @cached_property
    def mu(self) -> np.ndarray:
        return _freeze([p.mu for p in self.regimes])

    @cached_property
    def jump_mean(self) -> np.ndarray:
        return _freeze([p.jump.a for p in self.regimes])

    @cached_property
    def jump_std(self) -> np.ndarray:
        return _freeze([p.jump.b for p in self.regimes])

    @cached_property
    def kappa(self) -> np.ndarray:
        return _freeze([kappa(p.jump) for p in self.regimes])

    def drift(self) -> np.ndarray:
        """Per-regime log drift xi under this model's measure."""
        return self._drift

    @cached_property
    def _drift(self) -> np.ndarray:
        s2 = self.sigma**2
        if self.risk_neutral:
            return _freeze(self.measure.r - 0.5 * s2 - self.lam * self.kappa)
        return _freeze(self.mu - 0.5 * s2)

    def __eq__(self, other):
        if not isinstance(other, RegimeModel):
            return NotImplemented
        return (
            self.regimes == other.regimes
            and self.initial_state == other.initial_state
            and self.measure == other.measure
            and self.generator.shape == other.generator.shape
            and bool(np.all(self.generator == other.generator))
        )

    __hash__ = None


@dataclass(frozen=True)
class MeasureChangeSpec:
    """P -> Q data: intensity scalers, target jump laws, generator scalers.

    A ``None`` entry in ``q_jump`` keeps that regime's historical jump law.
    """

    psi: tuple[float, ...]
    q_jump: tuple[JumpLaw, ...]
    phi: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "psi", tuple(float(x) for x in self.psi))
        object.__setattr__(self, "q_jump", tuple(self.q_jump))
        m = len(self.psi)
        phi = np.ones((m, m)) if self.phi is None else self.phi
        object.__setattr__(self, "phi", _freeze(phi))


@dataclass(frozen=True)
class MarketSetup:
    S0: float
    r: float
    T: float
    alpha: float
    C: float = 0.0

    def __post_init__(self):
        problems = []
        if not (self.S0 > 0 and math.isfinite(self.S0)):
            problems.append(f"S0 must be > 0, got {self.S0}")
        if not math.isfinite(self.r):
            problems.append(f"rate must be finite, got {self.r}")
        if not (self.T > 0 and math.isfinite(self.T)):
            problems.append(f"horizon T must be > 0, got {self.T}")
        if not 0.0 < self.alpha < 1.0:
            problems.append(f"alpha must lie in (0, 1), got {self.alpha}")
        if not (self.C >= 0 and math.isfinite(self.C)):
            problems.append(f"budget C must be >= 0, got {self.C}")
        if problems:
            raise InputError("; ".join(problems))


def validate(model: RegimeModel) -> list[str]:
    """Return every broken invariant of ``model``; empty means valid."""
    out: list[str] = []
    M = model.M
    if M < 1:
        return ["regimes: at least one regime required"]
    gen = model.generator
    if gen.shape != (M, M):
        out.append(f"generator shape {gen.shape} does not match {M} regimes")
    else:
        if not np.all(np.isfinite(gen)):
            out.append("generator: entries must be finite")
        for i in range(M):
            for j in range(M):
                if i != j and gen[i, j] < 0:
                    out.append(f"generator row {i + 1}: entry ({i + 1},{j + 1}) is negative")
            s = gen[i].sum()
            scale = max(1.0, float(np.abs(gen[i]).max()))
            if not abs(s) <= ROW_SUM_TOL * scale:
                out.append(f"generator row {i + 1}: sums to {s:.6g}, expected 0")
    for k, p in enumerate(model.regimes, start=1):
        if not math.isfinite(p.mu):
            out.append(f"mu regime {k}: must be finite")
        if not (p.sigma > 0 and math.isfinite(p.sigma)):
            out.append(f"sigma regime {k}: must be > 0, got {p.sigma}")
        if not (p.lam >= 0 and math.isfinite(p.lam)):
            out.append(f"lambda regime {k}: must be >= 0, got {p.lam}")
        if not math.isfinite(p.jump.a):
            out.append(f"jump.a regime {k}: must be finite")
        if not (p.jump.b >= 0 and math.isfinite(p.jump.b)):
            out.append(f"jump.b regime {k}: must be >= 0, got {p.jump.b}")
    if not (isinstance(model.initial_state, (int, np.integer)) and 1 <= model.initial_state <= M):
        out.append(f"initial_state: must be an integer in 1..{M}, got {model.initial_state!r}")
    if model.risk_neutral and not math.isfinite(model.measure.r):
        out.append("measure: rate must be finite")
    return out


def check(model: RegimeModel) -> RegimeModel:
    """Raise ``ModelError`` unless ``model`` validates clean."""
    problems = validate(model)
    if problems:
        raise ModelError(problems)
    return model


def kappa(jump: JumpLaw) -> float:
    """Mean relative jump E[e^Y - 1] for Y ~ N(a, b^2)."""
    return math.expm1(jump.a + 0.5 * jump.b**2)


def identity_measure_change(M: int) -> MeasureChangeSpec:
    """Keep intensities, jump laws and generator; only the drift moves."""
    return MeasureChangeSpec(psi=(1.0,) * M, q_jump=(None,) * M)


def _q_jumps(p_model: RegimeModel, spec: MeasureChangeSpec) -> list[JumpLaw]:
    return [p.jump if qj is None else qj for p, qj in zip(p_model.regimes, spec.q_jump)]


def _check_change(p_model: RegimeModel, spec: MeasureChangeSpec) -> None:
    if p_model.risk_neutral:
        raise InputError("measure change expects a historical model")
    check(p_model)
    M = p_model.M
    if len(spec.psi) != M or len(spec.q_jump) != M or spec.phi.shape != (M, M):
        raise InputError(
            f"measure change dimensions (psi {len(spec.psi)}, jumps {len(spec.q_jump)}, "
            f"phi {spec.phi.shape}) do not match {M} regimes"
        )
    problems = [f"psi regime {i + 1}: must be > 0" for i, s in enumerate(spec.psi) if not s > 0]
    off = ~np.eye(M, dtype=bool)
    if np.any(spec.phi[off] <= 0):
        problems.append("phi: off-diagonal scalers must be > 0")
    for i, qj in enumerate(spec.q_jump):
        if qj is not None and not qj.b >= 0:
            problems.append(f"q_jump regime {i + 1}: b must be >= 0")
        if qj is not None and p_model.regimes[i].lam > 0:
            # the tilt is a density ratio, so both laws need a density or both a point mass
            if (qj.b == 0) != (p_model.regimes[i].jump.b == 0):
                problems.append(f"q_jump regime {i + 1}: not equivalent to the historical jump law")
            elif qj.b == 0 and qj.a != p_model.regimes[i].jump.a:
                problems.append(f"q_jump regime {i + 1}: point-mass jump cannot be moved")
    if problems:
        raise InputError("; ".join(problems))


def apply_measure_change(p_model: RegimeModel, spec: MeasureChangeSpec, r: float) -> RegimeModel:
    """Map a historical model to its risk-neutral counterpart at rate ``r``.

    Jump intensities are scaled by ``psi``, jump laws replaced by the tilted
    gaussians, and off-diagonal generator rates multiplied by ``phi`` before
    the diagonal is rebalanced.  The Q drift is not stored; it follows from
    the martingale condition whenever the model is used.
    """
    _check_change(p_model, spec)
    gen = p_model.generator * spec.phi
    np.fill_diagonal(gen, 0.0)
    np.fill_diagonal(gen, -gen.sum(axis=1))
    regimes = tuple(
        RegimeParams(mu=p.mu, sigma=p.sigma, lam=psi * p.lam, jump=qj)
        for p, psi, qj in zip(p_model.regimes, spec.psi, _q_jumps(p_model, spec))
    )
    return RegimeModel(gen, regimes, p_model.initial_state, RiskNeutral(float(r)))


def girsanov_shift(p_model: RegimeModel, spec: MeasureChangeSpec, r: float) -> np.ndarray:
    """Brownian drift shift theta_i = (r - mu_i - psi_i lambda_i kappa^Q_i) / sigma_i."""
    _check_change(p_model, spec)
    kq = np.array([kappa(j) for j in _q_jumps(p_model, spec)])
    return (r - p_model.mu - np.array(spec.psi) * p_model.lam * kq) / p_model.sigma


def market_price_of_risk(
    p_model: RegimeModel, spec: MeasureChangeSpec, r: float, regime: int, *, form: str = "excess"
) -> float:
    """Excess expected return of regime ``regime`` (1-based).

    ``form="excess"`` evaluates mu + lambda*kappa - r directly.
    ``form="measure"`` evaluates lambda*(kappa - psi*kappa^Q) - sigma*theta from
    the measure change; both must agree.
    """
    if not 1 <= regime <= p_model.M:
        raise InputError(f"regime must be in 1..{p_model.M}, got {regime}")
    i = regime - 1
    p = p_model.regimes[i]
    if form == "excess":
        return p.mu + p.lam * kappa(p.jump) - r
    if form == "measure":
        theta = girsanov_shift(p_model, spec, r)[i]
        kq = kappa(_q_jumps(p_model, spec)[i])
        return p.lam * (kappa(p.jump) - spec.psi[i] * kq) - p.sigma * theta
    raise InputError(f"unknown form {form!r}")


# -- builders ---------------------------------------------------------------


def _measure(r: float | None) -> Measure:
    return HISTORICAL if r is None else RiskNeutral(float(r))


def gbm(sigma: float, mu: float = 0.0, *, r: float | None = None) -> RegimeModel:
    """Single-regime GBM; pass ``r`` for the risk-neutral version."""
    return RegimeModel(np.zeros((1, 1)), (RegimeParams(mu, sigma),), 1, _measure(r))


def merton(sigma: float, lam: float, a: float, b: float, mu: float = 0.0, *, r: float | None = None) -> RegimeModel:
    return RegimeModel(np.zeros((1, 1)), (RegimeParams(mu, sigma, lam, JumpLaw(a, b)),), 1, _measure(r))


def two_state(
    sigma: Sequence[float],
    q: Sequence[float],
    *,
    mu: Sequence[float] = (0.0, 0.0),
    lam: Sequence[float] = (0.0, 0.0),
    a: Sequence[float] = (0.0, 0.0),
    b: Sequence[float] = (0.0, 0.0),
    initial_state: int = 1,
    r: float | None = None,
) -> RegimeModel:
    """Two-regime model with generator ((-q1, q1), (q2, -q2))."""
    q1, q2 = q
    regimes = tuple(RegimeParams(mu[i], sigma[i], lam[i], JumpLaw(a[i], b[i])) for i in range(2))
    return RegimeModel(np.array([[-q1, q1], [q2, -q2]]), regimes, initial_state, _measure(r))


# -- JSON documents ---------------------------------------------------------


def _number(doc: Any, path: str) -> float:
    if isinstance(doc, bool) or not isinstance(doc, (int, float)):
        raise InputError(f"{path}: expected a number, got {type(doc).__name__}")
    return float(doc)


def _get(doc: dict, key: str, path: str) -> Any:
    if not isinstance(doc, dict):
        raise InputError(f"{path}: expected an object")
    if key not in doc:
        raise InputError(f"{path}.{key}: missing field" if path else f"{key}: missing field")
    return doc[key]


def model_from_dict(doc: Any) -> RegimeModel:
    """Build a model from a parsed JSON document; errors name the offending path."""
    if not isinstance(doc, dict):
        raise InputError("$: expected a JSON object")
    M = _get(doc, "states", "")
    if isinstance(M, bool) or not isinstance(M, int) or M < 1:
        raise InputError(f"states: expected a positive integer, got {M!r}")
    gen = _get(doc, "generator", "")
    if not isinstance(gen, list) or len(gen) != M:
        raise InputError(f"generator: expected {M} rows")
    rows = []
    for i, row in enumerate(gen):
        if not isinstance(row, list) or len(row) != M:
            raise InputError(f"generator[{i}]: expected {M} entries")
        rows.append([_number(x, f"generator[{i}][{j}]") for j, x in enumerate(row)])
    regs = _get(doc, "regimes", "")
    if not isinstance(regs, list) or len(regs) != M:
        raise InputError(f"regimes: expected {M} entries")
    regimes = []
    for k, reg in enumerate(regs):
        p = f"regimes[{k}]"
        if not isinstance(reg, dict):
            raise InputError(f"{p}: expected an object")
        jump = reg.get("jump", {"a": 0.0, "b": 0.0})
        regimes.append(
            RegimeParams(
                mu=_number(reg.get("mu", 0.0), f"{p}.mu"),
                sigma=_number(_get(reg, "sigma", p), f"{p}.sigma"),
                lam=_number(reg.get("lambda", 0.0), f"{p}.lambda"),
                jump=JumpLaw(
                    _number(_get(jump, "a", f"{p}.jump"), f"{p}.jump.a"),
                    _number(_get(jump, "b", f"{p}.jump"), f"{p}.jump.b"),
                ),
            )
        )
    init = doc.get("initial_state", 1)
    if isinstance(init, bool) or not isinstance(init, int):
        raise InputError(f"initial_state: expected an integer, got {init!r}")
    meas = doc.get("measure", "P")
    if meas == "P":
        measure: Measure = HISTORICAL
    elif isinstance(meas, dict) and set(meas) == {"Q"} and isinstance(meas["Q"], dict):
        measure = RiskNeutral(_number(_get(meas["Q"], "r", "measure.Q"), "measure.Q.r"))
    else:
        raise InputError('measure: expected "P" or {"Q": {"r": <rate>}}')
    return check(RegimeModel(np.array(rows), tuple(regimes), init, measure))


def model_to_dict(model: RegimeModel) -> dict:
    return {
        "states": model.M,
        "generator": model.generator.tolist(),
        "regimes": [
            {"mu": p.mu, "sigma": p.sigma, "lambda": p.lam, "jump": {"a": p.jump.a, "b": p.jump.b}}
            for p in model.regimes
        ],
        "initial_state": int(model.initial_state),
        "measure": {"Q": {"r": model.measure.r}} if model.risk_neutral else "P",
    }


def load_model(path) -> RegimeModel:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return model_from_dict(doc)
