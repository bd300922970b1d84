import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from parisi.errors import InvalidTemperature, UnsupportedOrder
from parisi.functional import LOG2, p_hat_value
from parisi.minimize import (SCAN_COLUMNS, MinimizeOptions, embed, minimize, n_params,
                             op_to_params, params_to_op, scan_csv, temperature_scan)
from parisi.model import replica_symmetric, sk, validate_order_parameter


@pytest.mark.parametrize("gamma", [0.25, 0.81])
def test_replica_symmetric_region(gamma):
    meas = minimize(sk(), gamma, 2)
    assert meas.value == pytest.approx(LOG2 + gamma / 4, abs=1e-6)
    assert meas.overlap_moment <= 1e-6


def test_low_temperature_beats_replica_symmetric():
    meas = minimize(sk(), 4.0, 2)
    rs = p_hat_value(sk(), replica_symmetric(), 4.0)
    assert meas.value < rs - 1e-3
    assert meas.max_residual <= 1e-4
    assert meas.value <= LOG2 + 4.0 * float(sk().xi(1.0)) / 2


def test_high_temperature_limit():
    meas = minimize(sk(), 1e-6, 1)
    assert meas.value == pytest.approx(LOG2, abs=1e-6)


def test_rejects_bad_inputs():
    with pytest.raises(UnsupportedOrder):
        minimize(sk(), 1.0, 9)
    with pytest.raises(InvalidTemperature):
        minimize(sk(), 0.0, 1)


def test_k_zero_is_alpha_one():
    meas = minimize(sk(), 2.0, 0)
    assert meas.op.k == 0
    assert meas.value == pytest.approx(LOG2 + 0.5, abs=1e-14)


def test_reproducible():
    a = minimize(sk(), 3.0, 1, MinimizeOptions(seed=3))
    b = minimize(sk(), 3.0, 1, MinimizeOptions(seed=3))
    assert a.value == b.value and a.op == b.op


@given(st.integers(1, 4), st.data())
def test_reparametrization_round_trip(k, data):
    q = sorted(data.draw(st.lists(st.floats(0, 1), min_size=k, max_size=k)))
    m = sorted(data.draw(st.lists(st.floats(0, 1), min_size=k - 1, max_size=k - 1)))
    op = validate_order_parameter(k, q, m)
    x = op_to_params(op, k)
    assert len(x) == n_params(k)
    back = params_to_op(x, k)
    s = np.linspace(0.0, 1.0, 997)
    away = np.min(np.abs(s[:, None] - np.asarray(q)[None, :]), axis=1) > 1e-9
    np.testing.assert_allclose(back.alpha(s)[away], op.alpha(s)[away], atol=1e-12)


def test_embedding_keeps_alpha():
    op = validate_order_parameter(1, (0.4,))
    q, m = embed(op, 3)
    big = validate_order_parameter(3, q, m)
    s = np.linspace(0, 1, 101)
    np.testing.assert_array_equal(op.alpha(s), big.alpha(s))


def test_scan_csv_and_slope():
    rows = temperature_scan(sk(), [0.5, 0.8], k=1)
    text = scan_csv(rows)
    lines = text.strip().split("\n")
    assert lines[0] == ",".join(SCAN_COLUMNS)
    for r in rows:
        assert r.dvalue_fd == pytest.approx(0.25, abs=1e-6)
        assert r.dvalue_fd == pytest.approx(0.5 * r.measure.int_alpha_xi_prime, abs=1e-6)
    with pytest.raises(ValueError):
        temperature_scan(sk(), [1.0, 0.5], k=1)
