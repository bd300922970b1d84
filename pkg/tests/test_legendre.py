import math

import numpy as np
import pytest

from parisi.errors import NotAParisiMeasure
from parisi.functional import LOG2
from parisi.legendre import (default_panel, gamma_hat, l_hat, matching_witnesses)
from parisi.minimize import MinimizedCurve, MinimizeOptions
from parisi.model import (alpha_moments, atom_at_one, interpolate, l1_distance, replica_symmetric,
                          sk, validate_order_parameter)


def test_alpha_one_is_flat_at_log2():
    res = gamma_hat(sk(), replica_symmetric())
    assert res.flat and not res.divergent
    assert res.value == pytest.approx(LOG2, abs=1e-12)
    assert res.argmax_interval[0] == 0.0


def test_atom_at_one_diverges():
    res = gamma_hat(sk(), atom_at_one())
    assert res.divergent and res.value == math.inf


def test_interior_argmax_first_order_condition():
    op = validate_order_parameter(2, (0.2, 0.6), (0.3,))
    res = gamma_hat(sk(), op)
    assert math.isfinite(res.value) and res.argmax_gamma > 0
    assert abs(res.slope_at_argmax) <= 1e-7


def test_panel_is_ten_distinct_orders():
    panel = default_panel()
    assert len(panel) == 10
    assert len({(op.k, op.q, op.m) for op in panel}) == 10
    assert all(op != replica_symmetric() for op in panel)


def test_gamma_hat_convex_along_linear_paths():
    op0 = validate_order_parameter(2, (0.2, 0.6), (0.3,))
    op1 = validate_order_parameter(1, (0.5,))
    vals = [gamma_hat(sk(), interpolate(op0, op1, t)).value for t in (0.0, 0.5, 1.0)]
    assert vals[1] <= 0.5 * (vals[0] + vals[2]) + 1e-8


def test_l_hat_diverges_without_mass_below_one():
    assert l_hat(sk(), atom_at_one()).divergent


def test_matching_witnesses_share_the_integral():
    ops = matching_witnesses(sk(), 0.4)
    assert l1_distance(*ops) > 0
    for op in ops:
        assert alpha_moments(op, sk()).int_alpha_xi_prime == pytest.approx(0.4, abs=1e-12)
    with pytest.raises(ValueError):
        matching_witnesses(sk(), float(sk().xi(1.0)))


@pytest.mark.slow
def test_inverse_rejects_non_parisi_measure():
    from parisi.legendre import duality_inverse
    curve = MinimizedCurve(sk(), 1, MinimizeOptions())
    with pytest.raises(NotAParisiMeasure):
        duality_inverse(sk(), replica_symmetric(), 4.0, k=1, curve=curve)
