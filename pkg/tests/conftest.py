from __future__ import annotations

import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from rsjdvar.model import apply_measure_change, identity_measure_change, two_state  # noqa: E402

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

R = 0.005
TABLE1 = dict(sigma=(0.3, 0.05), q=(1.0, 0.2), lam=(2.0, 0.8), a=(0.0, 0.0), b=(0.08, 0.15))
TABLE2 = dict(TABLE1, a=(0.05, -0.3))

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def two_state_pair(params, r=R):
    p = two_state(params["sigma"], params["q"], mu=(r, r), lam=params["lam"], a=params["a"], b=params["b"])
    return p, apply_measure_change(p, identity_measure_change(2), r)


@pytest.fixture(scope="session")
def table1():
    return two_state_pair(TABLE1)


@pytest.fixture(scope="session")
def table2():
    return two_state_pair(TABLE2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {detail}")
