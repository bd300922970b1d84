"""Grid-free reference computations used to cross-check the cascade solver.

Everything here is a literal tensor-product Gauss-Hermite evaluation of the
nested expectations, so the cost is the product of the per-level orders; keep
k <= 2.  Each level gets enough nodes for its own scale (no sub-stepping here).
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import logsumexp, roots_hermitenorm

from .model import Mixture, OrderParameter


def _nodes(n):
    z, w = roots_hermitenorm(n)
    return z, w / w.sum()


def order_for(scale: float, base: int = 64) -> int:
    """Gauss-Hermite order for E f(y + scale z) with log cosh-like f, to ~1e-8."""
    for limit, n in ((1.0, base), (1.5, 128), (2.3, 256)):
        if scale <= limit:
            return max(n, base)
    return max(512, base)


class NestedQuadrature:
    """Psi(q_l, y) by direct recursion: no grid, no interpolation, no closed forms."""

    def __init__(self, mix: Mixture, op: OrderParameter, gamma: float, order: int = 64):
        self.op = op
        self.gamma = float(gamma)
        self.scales = np.sqrt(self.gamma * np.maximum(np.diff(mix.dxi(op.qs)), 0.0))
        self.nodes = [_nodes(order_for(sc, order)) for sc in self.scales]

    def psi(self, level: int, y):
        y = np.asarray(y, dtype=float)
        k = self.op.k
        if level == k + 1:
            return np.logaddexp(y, -y) - math.log(2.0)
        s = self.scales[level]
        if s == 0.0:
            return self.psi(level + 1, y)
        z, w = self.nodes[level]
        a = self.psi(level + 1, y[..., None] + s * z)
        m = self.op.ms[level]
        if m < 1e-5:
            # cumulant series k1 + m k2 / 2 + m^2 k3 / 6; the direct form cancels badly
            mean = a @ w
            d = a - mean[..., None]
            return mean + 0.5 * m * ((d * d) @ w) + (m * m / 6.0) * ((d * d * d) @ w)
        return logsumexp(m * a, b=w, axis=-1) / m

    def phi00(self) -> float:
        return float(self.psi(0, 0.0))

    def tilted_expectation(self, f, b: int) -> float:
        """E f(eta_b) exp sum_{l<b} m_l (Psi(q_{l+1}, eta_{l+1}) - Psi(q_l, eta_l)), eta_0 = 0."""
        ms = self.op.ms
        if b == 0:
            return float(f(np.zeros(1))[0])
        # eta_j over the tensor grid of (z_0, ..., z_{b-1}); axis i carries z_i
        shape = tuple(len(self.nodes[i][0]) for i in range(b))
        eta = [np.zeros([1] * b)]
        weight = np.ones([1] * b)
        for i in range(b):
            bshape = [1] * b
            bshape[i] = shape[i]
            z, w = self.nodes[i]
            eta.append(eta[-1] + self.scales[i] * z.reshape(bshape))
            weight = weight * w.reshape(bshape)
        log_tilt = np.zeros(shape)
        for l in range(b):
            if ms[l] != 0.0:
                log_tilt = log_tilt + ms[l] * (self.psi(l + 1, eta[l + 1]) - self.psi(l, eta[l]))
        vals = f(np.broadcast_to(eta[b], shape))
        return float(np.sum(weight * np.exp(log_tilt) * vals))


def central_difference(fun, x: float, step: float) -> float:
    return (fun(x + step) - fun(x - step)) / (2.0 * step)


def second_differences(values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    return v[2:] - 2.0 * v[1:-1] + v[:-2]
