"""Exact Monte Carlo for RSJD terminal values.

Conditional on the chain path, X_T is gaussian in the diffusion part and
compound Poisson with gaussian marks in the jump part, and both depend on
the path only through the time spent in each regime.  Sampling the
occupation times exactly therefore gives exact draws of X_T; there is no
time step anywhere.

Randomness: one ``SeedSequence`` per run, spawned into one Philox stream per
block of paths, so results depend only on (seed, paths, block size).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .model import RegimeModel
from .risk import LossSpec

__all__ = [
    "SimConfig",
    "ChainPath",
    "sample_chain",
    "sample_terminal_log",
    "occupation_times",
    "terminal_log_returns",
    "mc_cdf",
    "mc_put",
    "mc_beta",
    "mc_quantile",
]


@dataclass(frozen=True)
class SimConfig:
    paths: int
    seed: int = 0
    antithetic: bool = False
    block: int = 1 << 16

    def __post_init__(self):
        if self.paths < 1:
            raise InputError(f"paths must be >= 1, got {self.paths}")
        if self.seed < 0:
            raise InputError("seed must be a non-negative integer")
        if self.block < 1:
            raise InputError("block must be >= 1")
        if self.antithetic and (self.paths % 2 or self.block % 2):
            raise InputError("antithetic sampling needs even path and block counts")


@dataclass(frozen=True)
class ChainPath:
    times: tuple[float, ...]  # switch times in (0, T)
    states: tuple[int, ...]  # 1-based, len(times) + 1 entries


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def _jump_table(model: RegimeModel):
    gen = model.generator
    rates = -np.diag(gen).copy()
    probs = np.where(np.eye(model.M, dtype=bool), 0.0, gen)
    with np.errstate(invalid="ignore", divide="ignore"):
        probs = np.where(rates[:, None] > 0, probs / rates[:, None], 0.0)
    return rates, np.cumsum(probs, axis=1)


def sample_chain(model: RegimeModel, T: float, rng: np.random.Generator) -> ChainPath:
    """One path of the regime chain on [0, T]."""
    rates, cum = _jump_table(model)
    t, s = 0.0, model.initial_state - 1
    times, states = [], [s + 1]
    while rates[s] > 0:
        t += rng.exponential(1.0 / rates[s])
        if t >= T:
            break
        s = int(min(np.searchsorted(cum[s], rng.random(), side="right"), model.M - 1))
        times.append(t)
        states.append(s + 1)
    return ChainPath(tuple(times), tuple(states))


def occupation_times(model: RegimeModel, T: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Time spent in each regime on [0, T] for ``n`` independent chain paths, shape (n, M)."""
    M = model.M
    occ = np.zeros((n, M))
    if M == 1:
        occ[:, 0] = T
        return occ
    rates, cum = _jump_table(model)
    state = np.full(n, model.initial_state - 1)
    elapsed = np.zeros(n)
    active = np.arange(n)
    while active.size:
        s = state[active]
        r = rates[s]
        with np.errstate(divide="ignore"):
            hold = np.where(r > 0, rng.standard_exponential(active.size) / np.where(r > 0, r, 1.0), np.inf)
        left = T - elapsed[active]
        dt = np.minimum(hold, left)
        occ[active, s] += dt
        elapsed[active] += dt
        moving = hold < left
        active = active[moving]
        if not active.size:
            break
        u = rng.random(active.size)
        c = cum[state[active]]
        state[active] = np.minimum((u[:, None] >= c).sum(axis=1), M - 1)
    return occ


def _log_returns_from_occupation(model: RegimeModel, occ: np.ndarray, rng: np.random.Generator, z=None) -> np.ndarray:
    n = occ.shape[0]
    xi = model.drift()
    var = occ @ (model.sigma**2)
    if z is None:
        z = rng.standard_normal(n)
    x = occ @ xi + np.sqrt(var) * z
    for i, p in enumerate(model.regimes):
        if p.lam <= 0:
            continue
        counts = rng.poisson(p.lam * occ[:, i])
        x += counts * p.jump.a + np.sqrt(counts) * p.jump.b * rng.standard_normal(n)
    return x


def sample_terminal_log(model: RegimeModel, T: float, rng: np.random.Generator) -> float:
    """One exact draw of X_T = log(S_T / S0), built from an explicit chain path."""
    path = sample_chain(model, T, rng)
    edges = (0.0,) + path.times + (T,)
    occ = np.zeros((1, model.M))
    for k, s in enumerate(path.states):
        occ[0, s - 1] += edges[k + 1] - edges[k]
    return float(_log_returns_from_occupation(model, occ, rng)[0])


def terminal_log_returns(model: RegimeModel, T: float, cfg: SimConfig) -> np.ndarray:
    """``cfg.paths`` exact draws of X_T, in block order."""
    n_blocks = -(-cfg.paths // cfg.block)
    streams = np.random.SeedSequence(cfg.seed).spawn(n_blocks)
    out = []
    remaining = cfg.paths
    for ss in streams:
        rng = np.random.Generator(np.random.Philox(ss))
        n = min(cfg.block, remaining)
        remaining -= n
        occ = occupation_times(model, T, n, rng)
        z = None
        if cfg.antithetic:
            z = rng.standard_normal(n // 2)
            z = np.concatenate([z, -z])
        out.append(_log_returns_from_occupation(model, occ, rng, z))
    return np.concatenate(out)


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    n = values.size
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return mean, se


def _frequency(hits: np.ndarray, cfg: SimConfig) -> tuple[float, float]:
    if cfg.antithetic:
        return _mean_se(_antithetic_pairs(hits, cfg))
    p = float(hits.mean())
    return p, math.sqrt(p * (1 - p) / hits.size)


def mc_cdf(model: RegimeModel, T: float, S0: float, v: float, cfg: SimConfig) -> tuple[float, float]:
    """Empirical P(S_T < v) and its binomial standard error."""
    x = terminal_log_returns(model, T, cfg)
    return _frequency((S0 * np.exp(x) < v).astype(float), cfg)


def mc_put(q_model: RegimeModel, T: float, S0: float, K: float, cfg: SimConfig) -> tuple[float, float]:
    """Discounted mean put payoff under the risk-neutral model."""
    if not q_model.risk_neutral:
        raise InputError("put simulation needs a risk-neutral model")
    x = terminal_log_returns(q_model, T, cfg)
    pay = math.exp(-q_model.rate * T) * np.maximum(K - S0 * np.exp(x), 0.0)
    if cfg.antithetic:
        pay = _antithetic_pairs(pay, cfg)
    return _mean_se(pay)


def mc_beta(p_model: RegimeModel, loss: LossSpec, v: float, cfg: SimConfig) -> tuple[float, float]:
    """Empirical P(L^{h,K} >= v) with the loss assembled path by path."""
    s = loss.setup
    x = terminal_log_returns(p_model, s.T, cfg)
    ST = s.S0 * np.exp(x)
    L = s.S0 + loss.h * loss.put0 - loss.discount * (ST + loss.h * np.maximum(loss.K - ST, 0.0))
    return _frequency((L >= v).astype(float), cfg)


def mc_quantile(model: RegimeModel, T: float, S0: float, alpha: float, cfg: SimConfig) -> float:
    """Empirical alpha-quantile of S_T."""
    return float(S0 * np.exp(np.quantile(terminal_log_returns(model, T, cfg), alpha)))


def _antithetic_pairs(values: np.ndarray, cfg: SimConfig) -> np.ndarray:
    """Average each draw with its sign-flipped twin; twins sit half a block apart."""
    out = []
    start = 0
    while start < values.size:
        n = min(cfg.block, values.size - start)
        chunk = values[start : start + n]
        half = n // 2
        out.append(0.5 * (chunk[:half] + chunk[half : 2 * half]))
        start += n
    return np.concatenate(out)
