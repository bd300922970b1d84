import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from parisi.errors import InvalidParameter, InvalidTemperature, ResourceLimit
from parisi.rem import (GAMMA_C, LOG2, gamma_rem, p_rem, p_rem_slope, rem_csv, rem_finite_n_mc,
                        rem_legendre_sup, rem_legendre_sup_numeric, rem_variational_inf)


def test_values():
    assert p_rem(0.0).p_hat == LOG2
    assert p_rem(GAMMA_C).p_hat == pytest.approx(2 * LOG2, abs=1e-15)
    assert p_rem(8.0).p_hat == pytest.approx(math.sqrt(16 * LOG2), abs=1e-15)
    assert p_rem(1.0).regime == "high_temp" and p_rem(2.0).regime == "low_temp"


def test_c1_at_transition():
    eps = 1e-7
    left = (p_rem(GAMMA_C).p_hat - p_rem(GAMMA_C - eps).p_hat) / eps
    right = (p_rem(GAMMA_C + eps).p_hat - p_rem(GAMMA_C).p_hat) / eps
    assert left == pytest.approx(0.5, abs=1e-6)
    assert right == pytest.approx(0.5, abs=1e-6)
    assert p_rem_slope(GAMMA_C) == 0.5 == pytest.approx(math.sqrt(LOG2 / (2 * GAMMA_C)))


@given(st.floats(0.0, 50.0), st.floats(0.0, 50.0))
def test_concave(a, b):
    mid = p_rem(0.5 * (a + b)).p_hat
    assert mid >= 0.5 * (p_rem(a).p_hat + p_rem(b).p_hat) - 1e-12


@given(st.floats(0.05, 1.0))
def test_transform_and_round_trip(m):
    assert gamma_rem(m).value == pytest.approx(LOG2 / m, rel=1e-15)
    assert rem_legendre_sup(m) == pytest.approx(LOG2 / m, abs=1e-12)
    assert rem_legendre_sup_numeric(m) == pytest.approx(LOG2 / m, abs=1e-9)


@given(st.floats(0.01, 100.0))
def test_variational_inf_matches(gamma):
    val, m = rem_variational_inf(gamma)
    assert val == pytest.approx(p_rem(gamma).p_hat, abs=1e-12)
    assert 0.0 < m <= 1.0


def test_flat_argmax_at_m_one():
    assert gamma_rem(1.0).argmax == (0.0, GAMMA_C)


def test_errors():
    with pytest.raises(InvalidTemperature):
        p_rem(-1.0)
    with pytest.raises(InvalidParameter):
        gamma_rem(0.0)
    with pytest.raises(InvalidParameter):
        gamma_rem(1.5)
    with pytest.raises(ResourceLimit):
        rem_finite_n_mc(25, 16, 1.0)
    with pytest.raises(InvalidParameter):
        rem_finite_n_mc(10, 4, 1.0)


def test_mc_zero_temperature_exact():
    assert rem_finite_n_mc(12, 16, 0.0) == (LOG2, 0.0)


@pytest.mark.slow
def test_mc_n20_near_limit_with_finite_size_bias():
    # (1/N) E log Z_N sits below the limit by Jensen; at N = 20 the gap is well under 3%
    est, se = rem_finite_n_mc(20, 64, LOG2, seed=0)
    target = 1.5 * LOG2
    assert abs(est - target) <= 0.03 * target
    assert est <= target + 5 * se


@pytest.mark.slow
def test_mc_error_shrinks_with_n():
    gaps, ses = [], []
    for n in (12, 16, 20):
        est, se = rem_finite_n_mc(n, 32, LOG2, seed=n)
        gaps.append(abs(est - p_rem(LOG2).p_hat))
        ses.append(se)
    for i in range(2):
        assert gaps[i + 1] <= gaps[i] + 3 * math.hypot(ses[i], ses[i + 1])


def test_mc_reproducible():
    assert rem_finite_n_mc(10, 16, 2.0, seed=1) == rem_finite_n_mc(10, 16, 2.0, seed=1)


def test_csv():
    lines = rem_csv([0.5, 2.0]).splitlines()
    assert lines[0] == "gamma,p_rem,regime"
    g, v, r = lines[2].split(",")
    assert float(g) == 2.0 and float(v) == math.sqrt(4 * LOG2) and r == "low_temp"
