import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import mixtures, order_parameters
from parisi.cascade import (GridFunction, GridSpec, default_grid, expected_u_squared, gauss_hermite,
                            log_cosh, phi00, phi_value, solve_cascade, tilted_expectation)
from parisi.errors import GridTooNarrow, InvalidIntegrand, InvalidTemperature
from parisi.model import atom_at_one, replica_symmetric, sk, validate_order_parameter
from parisi.oracles import NestedQuadrature

# frozen from NestedQuadrature (tensor-product Gauss-Hermite, n = 64)
SK_K2 = dict(q=(0.3, 0.7), m=(0.4,), gamma=2.0, phi=0.8437116979557409)
# E tanh(z) sinh(z) e^{-1/2}, z ~ N(0, 1), by adaptive quadrature
RS_EU2_GAMMA1 = 0.5504004907933066


def test_gauss_hermite_moments():
    z, w = gauss_hermite(64)
    assert w.sum() == pytest.approx(1.0, abs=1e-15)
    assert w @ z ** 2 == pytest.approx(1.0, abs=1e-13)
    assert w @ z ** 4 == pytest.approx(3.0, abs=1e-12)


def test_log_cosh_stable():
    x = np.array([0.0, 1.0, 800.0, -800.0])
    np.testing.assert_allclose(log_cosh(x), [0.0, math.log(math.cosh(1.0)), 800 - math.log(2),
                                             800 - math.log(2)], rtol=1e-15)


def test_grid_function_cubic_exact_and_tails():
    g = GridSpec(8.0, 0.25)
    f = GridFunction(g.x ** 3 - g.x, 8.0, 0.25, (191.0, 191.0))
    y = np.array([-3.3, 0.1, 2.71])
    np.testing.assert_allclose(f(y), y ** 3 - y, atol=1e-11)
    assert f(np.array([9.0]))[0] == pytest.approx(8 ** 3 - 8 + 191.0)


def test_bad_grid_and_temperature():
    with pytest.raises(GridTooNarrow):
        solve_cascade(sk(), replica_symmetric(), 100.0, GridSpec(8.0, 0.5))
    with pytest.raises(InvalidTemperature):
        solve_cascade(sk(), replica_symmetric(), -1.0)


def test_replica_symmetric_closed_form():
    sol = solve_cascade(sk(), replica_symmetric(), 1.0)
    assert sol.phi00 == pytest.approx(0.5, abs=1e-15)
    assert expected_u_squared(sol).eu2[1] == pytest.approx(RS_EU2_GAMMA1, abs=1e-9)


def test_atom_at_one_is_plain_gaussian():
    # alpha = 0 below 1: Psi(0, 0) = E log cosh(sqrt(gamma xi'(1)) z), reference by mpmath
    sol = solve_cascade(sk(), atom_at_one(), 1.0)
    assert sol.phi00 == pytest.approx(0.374567207491438, abs=1e-9)


def test_zero_temperature():
    op = validate_order_parameter(2, (0.3, 0.7), (0.4,))
    assert phi00(sk(), op, 0.0) == 0.0
    assert solve_cascade(sk(), op, 0.0).phi00 == 0.0


def test_frozen_two_step_value():
    op = validate_order_parameter(2, SK_K2["q"], SK_K2["m"])
    sol = solve_cascade(sk(), op, SK_K2["gamma"])
    assert sol.phi00 == pytest.approx(SK_K2["phi"], abs=1e-9)
    assert phi00(sk(), op, SK_K2["gamma"]) == pytest.approx(SK_K2["phi"], abs=1e-9)


@given(mixtures(max_degree=3), order_parameters(max_k=2), st.floats(0.05, 4.0))
def test_cascade_matches_nested_quadrature(mix, op, gamma):
    sol = solve_cascade(mix, op, gamma)
    nq = NestedQuadrature(mix, op, gamma)
    assert sol.phi00 == pytest.approx(nq.phi00(), abs=1e-7)
    assert phi00(mix, op, gamma) == pytest.approx(sol.phi00, abs=1e-9)


@given(mixtures(max_degree=3), order_parameters(max_k=2), st.floats(0.05, 4.0))
def test_tilted_expectation_matches_nested_quadrature(mix, op, gamma):
    sol = solve_cascade(mix, op, gamma)
    nq = NestedQuadrature(mix, op, gamma)
    f = lambda y: np.tanh(y) ** 2
    for b in range(op.k + 2):
        assert tilted_expectation(sol, f, b) == pytest.approx(nq.tilted_expectation(f, b), abs=1e-7)


@given(mixtures(), order_parameters(), st.floats(0.0, 5.0))
def test_tilt_normalized(mix, op, gamma):
    sol = solve_cascade(mix, op, gamma)
    for b in range(op.k + 2):
        assert tilted_expectation(sol, lambda y: np.ones_like(y), b) == pytest.approx(1.0, abs=1e-12)


@given(mixtures(), order_parameters(), st.floats(0.1, 5.0))
def test_even_and_bounded_derivative(mix, op, gamma):
    sol = solve_cascade(mix, op, gamma)
    for l in range(op.k + 2):
        np.testing.assert_allclose(sol.psi[l], sol.psi[l][::-1], atol=1e-13)
        assert np.all(np.abs(sol.dpsi[l]) <= 1.0 + 1e-12)
    v, d = phi_value(sol, 0, 0.0)
    assert d == pytest.approx(0.0, abs=1e-14)


def test_single_wide_level_against_adaptive_quadrature():
    # alpha = 0 on [0, 1): eta(1) ~ N(0, gamma), one wide level; needs the sub-steps
    from scipy.integrate import quad
    sol = solve_cascade(sk(), validate_order_parameter(2, (0.0, 1.0), (0.0,)), 2.0)
    dens = lambda z: np.tanh(math.sqrt(2.0) * z) ** 2 * math.exp(-z * z / 2) / math.sqrt(2 * math.pi)
    exact = quad(dens, -np.inf, np.inf, epsabs=1e-14)[0]
    assert tilted_expectation(sol, lambda y: np.tanh(y) ** 2, 2) == pytest.approx(exact, abs=5e-9)


def test_eu2_equals_q_on_parisi_support_rs():
    # alpha == 1 at gamma <= 1: only the atom at 0 matters, where u = 0
    eu2 = expected_u_squared(solve_cascade(sk(), replica_symmetric(), 0.5)).eu2
    assert eu2[0] == 0.0


def test_non_finite_integrand_rejected():
    sol = solve_cascade(sk(), validate_order_parameter(1, (0.5,)), 1.0)
    with pytest.raises(InvalidIntegrand):
        tilted_expectation(sol, lambda y: np.where(y > 0, np.inf, 0.0), 1)


def test_default_grid_wide_enough():
    g = default_grid(sk(), 36.0)
    assert g.half_width >= 6 * math.sqrt(36.0 * 1.0)


def test_wide_levels_are_substepped():
    sol = solve_cascade(sk(), validate_order_parameter(1, (0.5,)), 5.0)
    assert sol.n_sub(0) > 1 and sol.sub_scale(0) <= 1.0
    assert phi00(sk(), sol.op, 5.0) == pytest.approx(sol.phi00, abs=1e-9)


@given(mixtures(), order_parameters(), st.floats(0.1, 5.0))
def test_levels_convex(mix, op, gamma):
    sol = solve_cascade(mix, op, gamma)
    for l in range(op.k + 2):
        assert np.diff(sol.psi[l], 2).min() >= -1e-9


@given(mixtures(max_degree=3), order_parameters(max_k=2), st.floats(0.2, 2.0), st.floats(1.1, 2.5))
def test_scaled_derivative_comparison(mix, op, g1, ratio):
    g2 = g1 * ratio
    grid = default_grid(mix, g2)
    s1, s2 = solve_cascade(mix, op, g1, grid), solve_cascade(mix, op, g2, grid)
    x = np.linspace(0.0, 4.0, 41)
    for b in range(op.k + 2):
        d1 = phi_value(s1, b, math.sqrt(g1) * x)[1]
        d2 = phi_value(s2, b, math.sqrt(g2) * x)[1]
        assert np.all(d1 <= d2 + 1e-8)


@given(mixtures(max_degree=3), order_parameters(max_k=2), st.floats(0.2, 4.0))
def test_tilted_derivative_square_nondecreasing_in_x(mix, op, gamma):
    sol = solve_cascade(mix, op, gamma)
    b = op.k + 1
    deriv = sol.reader(b)[1]
    vals = [tilted_expectation(sol, lambda y: deriv(y) ** 2, b, 0, x) for x in np.linspace(0, 3, 13)]
    assert np.diff(vals).min() >= -1e-8


@pytest.mark.parametrize("gamma", [2.0, 4.5])
def test_grid_refinement(gamma):
    op = validate_order_parameter(2, SK_K2["q"], SK_K2["m"])
    g = default_grid(sk(), gamma)
    fine = GridSpec(g.half_width, g.spacing / 2, 2 * g.order)
    assert abs(phi00(sk(), op, gamma, g) - phi00(sk(), op, gamma, fine)) < 1e-8


def test_fkg_spot_check():
    z, w = gauss_hermite(64)
    for x in np.linspace(0.0, 3.0, 7):
        for var in (0.1, 0.5, 1.0, 2.0):
            y = x + math.sqrt(var) * z
            d = np.cosh(y) / (w @ np.cosh(y))
            lhs = w @ (y ** 2 * np.tanh(y) * d)
            rhs = (w @ (y ** 2 * d)) * (w @ (np.tanh(y) * d))
            assert lhs >= rhs - 1e-12
