from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import lognormal_quantile
from rsjdvar.errors import InputError
from rsjdvar.model import MarketSetup, gbm
from rsjdvar.risk import (
    LossSpec,
    g_inverse,
    g_transform,
    hedged_loss_tail_prob,
    hedged_var,
    quantile,
    var_unhedged,
)
from rsjdvar.simulate import SimConfig, mc_quantile, terminal_log_returns
from rsjdvar.transform import put_price, tail_prob


def test_gbm_quantile_closed_form():
    q = quantile(0.01, 1.0, gbm(0.2, 0.05), 100.0)
    assert q == pytest.approx(lognormal_quantile(0.01, 100, 1, 0.05, 0.2), rel=1e-11)


def test_median():
    assert quantile(0.5, 1.0, gbm(0.2, 0.05), 100.0) == pytest.approx(100 * math.exp(0.03), rel=1e-12)


def test_quantile_rejects_bad_alpha():
    with pytest.raises(InputError):
        quantile(0.0, 1.0, gbm(0.2), 100.0)
    with pytest.raises(InputError):
        quantile(1.0, 1.0, gbm(0.2), 100.0)


def test_quantile_against_simulation(table1):
    p = table1[0]
    q = quantile(0.01, 1.0, p, 100.0)
    x = np.sort(terminal_log_returns(p, 1.0, SimConfig(1_000_000, seed=0)))
    # order-statistic confidence band for the empirical 1% point
    n, a = x.size, 0.01
    half = 3 * math.sqrt(n * a * (1 - a))
    lo, hi = 100 * math.exp(x[int(n * a - half)]), 100 * math.exp(x[int(n * a + half)])
    assert lo <= q <= hi
    assert mc_quantile(p, 1.0, 100.0, a, SimConfig(200_000, seed=1)) == pytest.approx(q, rel=0.03)


def test_quantile_residual_contract(table1, table2):
    for p in (table1[0], table2[0]):
        for a in (0.005, 0.01, 0.05, 0.1, 0.5):
            q = quantile(a, 1.0, p, 100.0)
            assert abs(tail_prob(q, 1.0, p, 100.0) - a) < 1e-10


def test_quantile_strictly_increasing(table2):
    qs = [quantile(a, 3.0, table2[0], 100.0) for a in (0.005, 0.01, 0.05, 0.1, 0.5)]
    assert all(b > a for a, b in zip(qs, qs[1:]))


def test_var_unhedged_gbm():
    setup = MarketSetup(100.0, 0.05, 1.0, 0.01)
    expected = 100 - math.exp(-0.05) * lognormal_quantile(0.01, 100, 1, 0.05, 0.2)
    assert var_unhedged(setup, gbm(0.2, 0.05)) == pytest.approx(expected, rel=1e-11)
    assert var_unhedged(setup, gbm(0.2, 0.05)) > var_unhedged(MarketSetup(100.0, 0.05, 1.0, 0.05), gbm(0.2, 0.05))


def test_var_vanishes_in_the_riskless_limit():
    assert abs(var_unhedged(MarketSetup(100.0, 0.03, 1.0, 0.01), gbm(1e-4, 0.03))) < 0.05


def _loss(h, K=100.0, put0=2.0, r=0.0):
    return LossSpec(MarketSetup(100.0, r, 1.0, 0.01), h, K, put0)


def test_g_transform_examples():
    loss = _loss(0.5, K=90.0, put0=2.0)  # Kbar = 10
    assert g_transform(5.0, loss) == pytest.approx(6.0)
    assert g_transform(14.0, loss) == pytest.approx(13.0)
    full = _loss(1.0, K=90.0, put0=2.0)
    assert g_transform(50.0, full) == pytest.approx(12.0)
    assert g_transform(80.0, full) == pytest.approx(12.0)


def test_g_inverse_cap_for_full_hedge():
    full = _loss(1.0, K=90.0, put0=2.0)
    assert g_inverse(12.5, full) is None
    assert g_inverse(11.0, full) == pytest.approx(9.0)
    assert hedged_loss_tail_prob(12.5, full, gbm(0.2)) == 0.0


@pytest.mark.parametrize("h", [0.1, 0.5, 0.99])
def test_g_round_trip(h):
    loss = _loss(h, K=95.0, put0=3.0)
    rng = np.random.default_rng(int(h * 100))
    for u in rng.uniform(-50, 100, 100):
        assert g_inverse(g_transform(u, loss), loss) == pytest.approx(u, abs=1e-12 * max(1, abs(u)))


@given(st.floats(0.0, 0.999), st.floats(-100, 100), st.floats(-100, 100))
def test_g_is_monotone(h, u, w):
    loss = _loss(h, K=95.0, put0=3.0)
    lo, hi = min(u, w), max(u, w)
    assert g_transform(lo, loss) <= g_transform(hi, loss) + 1e-12


def test_hedged_var_identities(table1):
    p, q = table1
    setup = MarketSetup(100.0, 0.005, 1.0, 0.01, 0.1)
    qa = quantile(0.01, 1.0, p, 100.0)
    var_u = var_unhedged(setup, p)
    K = 60.0
    put0 = put_price(K, 1.0, q, 100.0)
    loss = LossSpec(setup, 0.3, K, put0)
    assert hedged_var(loss, qa) == pytest.approx(g_transform(var_u, loss), abs=1e-12)
    assert hedged_var(LossSpec(setup, 0.0, K, put0), qa) == pytest.approx(var_u, abs=1e-12)
    otm = LossSpec(setup, 0.3, 0.9 * qa, put_price(0.9 * qa, 1.0, q, 100.0))
    assert hedged_var(otm, qa) > var_u


def test_hedged_tail_at_var_is_alpha(table1):
    p, q = table1
    setup = MarketSetup(100.0, 0.005, 1.0, 0.01, 0.1)
    qa = quantile(0.01, 1.0, p, 100.0)
    for h, K in ((0.2, 60.0), (0.7, 55.0), (0.5, 40.0)):
        loss = LossSpec(setup, h, K, put_price(K, 1.0, q, 100.0))
        assert hedged_loss_tail_prob(hedged_var(loss, qa), loss, p) == pytest.approx(0.01, abs=1e-8)
    assert hedged_loss_tail_prob(-1e6, loss, p) == pytest.approx(1.0, abs=1e-10)


def test_loss_spec_validates():
    with pytest.raises(InputError):
        _loss(1.5)
    with pytest.raises(InputError):
        _loss(0.5, K=0.0)
    with pytest.raises(InputError):
        _loss(0.5, put0=-1.0)
