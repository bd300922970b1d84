import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import mixtures, order_parameters
from parisi.cascade import default_grid, expected_u_squared, phi00, solve_cascade
from parisi.functional import LOG2, evaluate, p_hat_value, stationarity_residual
from parisi.model import interpolate, replica_symmetric, sk, validate_order_parameter
from parisi.oracles import central_difference, second_differences


@pytest.mark.parametrize("gamma", [0.0, 0.3, 1.0, 2.5])
def test_rs_closed_form(gamma):
    ev = evaluate(sk(), replica_symmetric(), gamma)
    assert ev.p_hat == pytest.approx(LOG2 + gamma / 4, abs=1e-14)
    assert ev.dgamma_p == pytest.approx(0.25, abs=1e-9)


@given(mixtures(), order_parameters(), st.floats(0.1, 5.0))
def test_derivative_matches_finite_difference(mix, op, gamma):
    grid = default_grid(mix, 5.2)
    ev = evaluate(mix, op, gamma, grid)
    h = 1e-4 * max(1.0, gamma)
    fd = central_difference(lambda g: p_hat_value(mix, op, g, grid), gamma, h)
    assert ev.dgamma_p == pytest.approx(fd, rel=1e-5, abs=1e-9)
    assert ev.dgamma_p == pytest.approx(ev.dgamma_p_alt, abs=1e-12)


@given(mixtures(), order_parameters())
def test_concave_in_gamma_convex_in_beta(mix, op):
    grid = default_grid(mix, 5.0)
    gammas = np.linspace(0.1, 5.0, 15)
    assert second_differences([phi00(mix, op, g, grid) for g in gammas]).max() <= 1e-8
    betas = np.sqrt(gammas)
    betas = np.linspace(betas[0], betas[-1], 15)
    assert second_differences([phi00(mix, op, b * b, grid) for b in betas]).min() >= -1e-10


@given(mixtures(), order_parameters(), st.floats(0.1, 2.5))
def test_eu2_nondecreasing_in_gamma(mix, op, gamma):
    grid = default_grid(mix, 5.0)
    a = expected_u_squared(solve_cascade(mix, op, gamma, grid)).eu2
    b = expected_u_squared(solve_cascade(mix, op, 2 * gamma, grid)).eu2
    assert all(y >= x - 1e-8 for x, y in zip(a, b))


@given(mixtures(max_degree=3), order_parameters(max_k=2), order_parameters(max_k=2),
       st.floats(0.2, 4.0))
def test_convex_along_linear_paths(mix, op0, op1, gamma):
    grid = default_grid(mix, 4.0)
    f = lambda t: p_hat_value(mix, interpolate(op0, op1, t), gamma, grid)
    ends = (f(0.0), f(1.0))
    for t in (0.25, 0.5, 0.75):
        assert f(t) <= (1 - t) * ends[0] + t * ends[1] + 1e-9


def test_stationarity_at_rs_minimizer():
    res = stationarity_residual(sk(), replica_symmetric(), 0.5)
    np.testing.assert_allclose(res, [0.0], atol=1e-15)


def test_evaluation_dict():
    grid = default_grid(sk(), 1.0)
    d = evaluate(sk(), validate_order_parameter(1, (0.5,)), 1.0, grid).to_dict(grid)
    assert set(d) >= {"p_hat", "phi00", "eu2", "dgamma_p", "version", "grid"}
    assert math.isfinite(d["p_hat"])
