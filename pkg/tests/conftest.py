import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from parisi.model import make_mixture, validate_order_parameter

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def mixtures(draw, max_degree=4):
    """Mixtures sum c_p^2 t^p, p = 2..P, normalized to xi'(1) = 1."""
    top = draw(st.integers(2, max_degree))
    c = np.array(draw(st.lists(st.floats(0.1, 1.0), min_size=top - 1, max_size=top - 1)))
    c = c / math.sqrt(np.sum(np.arange(2, top + 1) * c ** 2))
    return make_mixture(list(c))


@st.composite
def order_parameters(draw, max_k=3):
    k = draw(st.integers(0, max_k))
    q = sorted(draw(st.lists(st.floats(0.0, 1.0), min_size=k, max_size=k)))
    m = sorted(draw(st.lists(st.floats(0.0, 1.0), min_size=max(k - 1, 0), max_size=max(k - 1, 0))))
    return validate_order_parameter(k, q, m)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
