from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate
from scipy.stats import norm

from oracles import expm_taylor
from rsjdvar.charfun import gft, gft_matrix, gft_two_state, jump_gft, log_return_moments, regime_exponents
from rsjdvar.errors import InputError
from rsjdvar.model import JumpLaw, gbm, kappa, merton, two_state


def test_jump_gft_basics():
    j = JumpLaw(0.05, 0.08)
    assert jump_gft(j, 0.0) == 1.0
    assert jump_gft(j, -1j) == pytest.approx(1 + kappa(j), rel=1e-15)


def test_jump_gft_against_density_quadrature():
    a, b, z = 0.05, 0.08, 1 + 0.5j

    def part(f):
        return integrate.quad(lambda y: f(np.exp(1j * z * y)) * norm.pdf(y, a, b), a - 10 * b, a + 10 * b, epsabs=1e-14)[0]

    oracle = part(np.real) + 1j * part(np.imag)
    assert abs(jump_gft(JumpLaw(a, b), z) - oracle) < 1e-12


def test_regime_exponents_vanish_at_zero(table1):
    assert np.all(regime_exponents(0.0, table1[0]) == 0)


def test_single_regime_gbm_exponent():
    m = gbm(0.25, 0.07)
    z = np.array([0.3, 1.0 - 0.4j, -2 + 1j])
    xi = 0.07 - 0.5 * 0.25**2
    expected = np.exp(1j * z * xi * 2.0 - 0.5 * z * z * 0.25**2 * 2.0)
    assert np.allclose(np.exp(1j * regime_exponents(z, m)[..., 0] * 2.0), expected, rtol=1e-14)


def test_risk_neutral_exponent_at_minus_i(table1):
    th = regime_exponents(-1j, table1[1])
    assert np.allclose(th, -1j * 0.005, atol=1e-12)


def test_matrix_gft_trivial_values(table1):
    p = table1[0]
    assert gft_matrix(0.0, 1.7, p) == pytest.approx(1.0, abs=1e-14)
    assert gft_matrix(0.3 + 0.4j, 0.0, p) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(InputError):
        gft_matrix(0.0, -1.0, p)


def test_matrix_gft_against_taylor_series(table1):
    p = table1[0]
    z, T = 0.7 + 1.3j, 1.0
    th = regime_exponents(z, p)
    A = p.generator.T.astype(complex) + 1j * np.diag(th)
    oracle = expm_taylor(A * T)[:, 0].sum()
    assert abs(gft_matrix(z, T, p) - oracle) < 1e-12
    assert abs(gft_two_state(z, T, p) - oracle) < 1e-9


def test_two_state_special_cases():
    frozen = two_state((0.2, 0.4), (0.0, 0.0), lam=(1.0, 0.3), a=(-0.1, 0.0), b=(0.1, 0.2), mu=(0.05, 0.0))
    z = np.linspace(-5, 5, 11) + 0.8j
    first = np.exp(1j * regime_exponents(z, frozen)[..., 0] * 1.3)
    assert np.allclose(gft_two_state(z, 1.3, frozen), first, rtol=1e-13)
    assert gft_two_state(0.0, 2.0, frozen) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(InputError):
        gft_two_state(0.0, 1.0, gbm(0.2))


@pytest.mark.parametrize("initial", [1, 2])
def test_two_state_on_shifted_contour(initial):
    rng = np.random.default_rng(initial)
    m = two_state(
        rng.uniform(0.05, 0.5, 2), rng.uniform(0.0, 4.0, 2), mu=rng.uniform(-0.1, 0.1, 2),
        lam=rng.uniform(0, 3, 2), a=rng.uniform(-0.3, 0.1, 2), b=rng.uniform(0, 0.2, 2), initial_state=initial,
    )
    z = np.linspace(-20, 20, 50) + 1.2j
    assert np.max(np.abs(gft_two_state(z, 1.5, m) - gft_matrix(z, 1.5, m))) < 1e-9


def test_two_state_near_merged_roots():
    # theta = 0 away from z = 0: identical regimes give a double structure in the ODE
    m = two_state((0.2, 0.2), (1e-9, 1e-9), mu=(0.03, 0.03))
    z = np.array([0.5, 1.0 + 0.5j])
    assert np.allclose(gft_two_state(z, 1.0, m), gft(z, 1.0, gbm(0.2, 0.03)), rtol=1e-12)


@given(
    st.floats(0.05, 0.6), st.floats(0.05, 0.6), st.floats(0.0, 5.0), st.floats(0.0, 5.0),
    st.floats(0.0, 3.0), st.floats(-0.3, 0.1), st.floats(0.0, 0.3), st.floats(0.05, 5.0),
    st.floats(-15, 15), st.floats(-1.5, 2.5), st.sampled_from([1, 2]),
)
def test_two_state_equals_matrix_property(s1, s2, q1, q2, lam, a, b, T, u, nu, init):
    m = two_state((s1, s2), (q1, q2), lam=(lam, 0.5 * lam), a=(a, -a), b=(b, 0.5 * b), initial_state=init)
    z = u + 1j * nu
    assert abs(gft_two_state(z, T, m) - gft_matrix(z, T, m)) < 1e-9 * max(1.0, abs(gft_matrix(z, T, m)))


def test_single_regime_reduction():
    m = merton(0.15, 1.2, -0.1, 0.12, mu=0.04)
    z = np.linspace(-4, 4, 9) + 0.6j
    T = 1.3
    xi = 0.04 - 0.5 * 0.15**2
    expected = np.exp(1j * z * xi * T - 0.5 * z * z * 0.15**2 * T + 1.2 * T * (jump_gft(JumpLaw(-0.1, 0.12), z) - 1))
    assert np.allclose(gft(z, T, m), expected, rtol=1e-12)
    assert np.allclose(gft_matrix(z, T, m), expected, rtol=1e-12)


def test_invariants_on_three_regimes():
    gen = np.array([[-1.0, 0.6, 0.4], [0.3, -0.5, 0.2], [1.0, 1.0, -2.0]])
    from rsjdvar.model import RegimeModel, RegimeParams, RiskNeutral

    m = RegimeModel(
        gen,
        (RegimeParams(0.0, 0.2, 1.0, JumpLaw(-0.1, 0.1)), RegimeParams(0.0, 0.1), RegimeParams(0.0, 0.4, 3.0, JumpLaw(0.05, 0.2))),
        2,
        RiskNeutral(0.03),
    )
    for T in (0.1, 1.0, 10.0):
        assert abs(gft_matrix(0.0, T, m) - 1) < 1e-12
        assert abs(gft_matrix(-1j, T, m) - math.exp(0.03 * T)) < 1e-8
    u = np.linspace(-30, 30, 61)
    assert np.all(np.abs(gft_matrix(u, 2.0, m)) <= 1 + 1e-12)
    left, right = gft_matrix(-u + 0.7j, 2.0, m), gft_matrix(u + 0.7j, 2.0, m)
    assert np.allclose(left, np.conj(right), atol=1e-14)


def test_log_return_moments_gbm():
    mean, sd = log_return_moments(2.0, gbm(0.3, 0.08))
    assert mean == pytest.approx((0.08 - 0.045) * 2.0, abs=1e-7)
    assert sd == pytest.approx(0.3 * math.sqrt(2.0), rel=1e-6)
