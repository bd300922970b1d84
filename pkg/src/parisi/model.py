"""Mixtures xi(t) = sum_p c_p^2 t^p and finite-step order parameters.

Order parameters are kept in the usual (q, m) form::

    0 = q_0 <= q_1 <= ... <= q_k <= q_{k+1} = 1
    0 = m_0 <= m_1 <= ... <= m_{k-1} <= m_k = 1

with alpha(s) = m_l on [q_l, q_{l+1}) and alpha(1) = 1.  For k = 0 the single
level carries m_0 = 1, i.e. alpha == 1 (a unit atom at 0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import InvalidMixture, InvalidOrderParameter

MAX_DEGREE = 64


@dataclass(frozen=True)
class Mixture:
    """xi(t) = sum_{p>=2} c_p^2 t^p; ``coeffs[i]`` is c_{i+2}."""

    coeffs: tuple

    @property
    def degree(self) -> int:
        return len(self.coeffs) + 1

    @property
    def _poly(self) -> np.ndarray:
        a = np.zeros(len(self.coeffs) + 2)
        a[2:] = np.square(self.coeffs)
        return a

    def xi(self, t):
        return npoly.polyval(t, self._poly)

    def dxi(self, t):
        return npoly.polyval(t, npoly.polyder(self._poly))

    def ddxi(self, t):
        return npoly.polyval(t, npoly.polyder(self._poly, 2))

    def to_config(self) -> dict:
        return {"coeffs": {str(p): float(c) for p, c in enumerate(self.coeffs, start=2) if c != 0.0}}

    def __repr__(self):
        terms = ", ".join(f"c{p}={c:g}" for p, c in enumerate(self.coeffs, start=2) if c != 0.0)
        return f"Mixture({terms})"


def make_mixture(coeffs) -> Mixture:
    """Build a mixture from a sequence (starting at p=2) or a ``{p: c_p}`` map."""
    if isinstance(coeffs, Mapping):
        if not coeffs:
            raise InvalidMixture("no coefficients given")
        try:
            items = {int(p): float(c) for p, c in coeffs.items()}
        except (TypeError, ValueError) as exc:
            raise InvalidMixture(f"bad coefficient map: {exc}") from None
        if min(items) < 2:
            raise InvalidMixture(f"p must be >= 2, got p={min(items)}")
        top = max(items)
        seq = [items.get(p, 0.0) for p in range(2, top + 1)]
    else:
        try:
            seq = [float(c) for c in coeffs]
        except (TypeError, ValueError) as exc:
            raise InvalidMixture(f"bad coefficient sequence: {exc}") from None
    if not seq:
        raise InvalidMixture("no coefficients given")
    if not all(math.isfinite(c) for c in seq):
        raise InvalidMixture("coefficients must be finite")
    while seq and seq[-1] == 0.0:
        seq.pop()
    if not seq:
        raise InvalidMixture("all coefficients are zero")
    if len(seq) + 1 > MAX_DEGREE:
        raise InvalidMixture(f"degree {len(seq) + 1} exceeds the maximum {MAX_DEGREE}")
    return Mixture(tuple(seq))


def sk() -> Mixture:
    """The Sherrington-Kirkpatrick model, xi(t) = t^2 / 2."""
    return Mixture((math.sqrt(0.5),))


@dataclass(frozen=True)
class OrderParameter:
    k: int
    q: tuple
    m: tuple

    @property
    def qs(self) -> np.ndarray:
        """Breakpoints q_0 .. q_{k+1}."""
        return np.array((0.0,) + tuple(self.q) + (1.0,))

    @property
    def ms(self) -> np.ndarray:
        """Level values m_0 .. m_k."""
        if self.k == 0:
            return np.array([1.0])
        return np.array((0.0,) + tuple(self.m) + (1.0,))

    def atoms(self):
        """Positions q_0..q_k and the masses dalpha puts on them."""
        ms = self.ms
        return self.qs[:-1], np.diff(ms, prepend=0.0)

    def alpha(self, s):
        s = np.asarray(s, dtype=float)
        idx = np.searchsorted(self.qs[:-1], s, side="right") - 1
        return self.ms[np.clip(idx, 0, self.k)]

    def to_config(self) -> dict:
        return {"k": self.k, "q": [float(x) for x in self.q], "m": [float(x) for x in self.m]}


def validate_order_parameter(k, q, m=()) -> OrderParameter:
    """Check (k, q, m) and return the order parameter with zero-width interior levels merged."""
    try:
        k = int(k)
        q = [float(x) for x in q]
        m = [float(x) for x in m]
    except (TypeError, ValueError) as exc:
        raise InvalidOrderParameter(f"non-numeric entry: {exc}") from None
    if k < 0:
        raise InvalidOrderParameter(f"k must be nonnegative, got {k}")
    if len(q) != k:
        raise InvalidOrderParameter(f"expected {k} q values, got {len(q)}")
    if len(m) != max(k - 1, 0):
        raise InvalidOrderParameter(f"expected {max(k - 1, 0)} m values, got {len(m)}")
    for name, seq in (("q", q), ("m", m)):
        for i, x in enumerate(seq):
            if not (0.0 <= x <= 1.0):
                raise InvalidOrderParameter(f"{name}[{i}] = {x!r} is outside [0, 1]", index=i)
            if i > 0 and x < seq[i - 1]:
                raise InvalidOrderParameter(
                    f"{name}[{i}] = {x!r} is below {name}[{i - 1}] = {seq[i - 1]!r}", index=i)

    # full arrays; level l is [qs[l], qs[l+1]) with value ms[l]
    qs = [0.0] + q + [1.0]
    ms = [0.0] + m + [1.0] if k else [1.0]
    l = 1
    while l < len(ms) - 1:
        if qs[l] == qs[l + 1]:
            del qs[l], ms[l]
        else:
            l += 1
    k = len(ms) - 1 if len(ms) > 1 else 0
    return OrderParameter(k, tuple(qs[1:-1]), tuple(ms[1:-1]))


def replica_symmetric() -> OrderParameter:
    """alpha == 1, i.e. dalpha is a unit atom at 0."""
    return OrderParameter(0, (), ())


def atom_at_one() -> OrderParameter:
    """alpha == 0 on [0, 1), i.e. dalpha is a unit atom at 1."""
    return OrderParameter(1, (1.0,), ())


def from_steps(starts, values) -> OrderParameter:
    """Order parameter equal to ``values[j]`` on ``[starts[j], starts[j+1])``.

    ``starts[0]`` must be 0 and ``values`` nondecreasing in [0, 1].  Missing
    conventions are patched in: a zero-width level 0 is prepended when
    values[0] > 0, and an atom at 1 appended when the last value is below 1.
    """
    starts = [float(x) for x in starts]
    values = [float(x) for x in values]
    if not starts or starts[0] != 0.0 or len(starts) != len(values):
        raise InvalidOrderParameter("steps must start at 0 with one value per start")
    if values[0] > 0.0:
        starts.insert(0, 0.0)
        values.insert(0, 0.0)
    if values[-1] < 1.0:
        starts.append(1.0)
        values.append(1.0)
    k = len(starts) - 1
    return validate_order_parameter(k, starts[1:], values[1:-1])


def _common_steps(op0: OrderParameter, op1: OrderParameter):
    starts = np.unique(np.concatenate([op0.qs[:-1], op1.qs[:-1]]))
    return starts, op0.alpha(starts), op1.alpha(starts)


def interpolate(op0: OrderParameter, op1: OrderParameter, t: float) -> OrderParameter:
    """The pointwise mixture (1 - t) alpha_0 + t alpha_1 on the common refinement."""
    starts, a0, a1 = _common_steps(op0, op1)
    vals = np.clip((1.0 - t) * a0 + t * a1, 0.0, 1.0)
    vals = np.maximum.accumulate(vals)
    # the value at 1 is always 1, so a trailing start at 1 carries no information
    if starts[-1] == 1.0 and len(starts) > 1:
        starts, vals = starts[:-1], vals[:-1]
    return from_steps(starts, vals)


def l1_distance(op0: OrderParameter, op1: OrderParameter) -> float:
    starts, a0, a1 = _common_steps(op0, op1)
    widths = np.diff(np.append(starts, 1.0))
    return float(np.sum(np.abs(a0 - a1) * widths))


@dataclass(frozen=True)
class AlphaMoments:
    int_alpha_xi_prime: float
    int_alpha_s_xi2: float
    int_xi_dalpha: float
    int_s_xiprime_dalpha: float


def alpha_moments(op: OrderParameter, mix: Mixture) -> AlphaMoments:
    """Closed-form integrals of the step function alpha against xi and its derivatives."""
    qs, ms = op.qs, op.ms
    lo, hi = qs[:-1], qs[1:]

    def g(s):  # antiderivative of s xi''(s)
        return s * mix.dxi(s) - mix.xi(s)

    pos, mass = op.atoms()
    return AlphaMoments(
        int_alpha_xi_prime=float(np.sum(ms * (mix.xi(hi) - mix.xi(lo)))),
        int_alpha_s_xi2=float(np.sum(ms * (g(hi) - g(lo)))),
        int_xi_dalpha=float(np.sum(mass * mix.xi(pos))),
        int_s_xiprime_dalpha=float(np.sum(mass * pos * mix.dxi(pos))),
    )


def order_parameter_from_config(cfg: Mapping) -> OrderParameter:
    unknown = set(cfg) - {"k", "q", "m"}
    if unknown:
        raise InvalidOrderParameter(f"unknown order-parameter keys: {sorted(unknown)}")
    if "k" not in cfg:
        raise InvalidOrderParameter("order parameter needs 'k'")
    return validate_order_parameter(cfg["k"], cfg.get("q", []), cfg.get("m", []))


def mixture_from_config(cfg: Mapping) -> Mixture:
    if "coeffs" not in cfg:
        raise InvalidMixture("mixture needs 'coeffs'")
    return make_mixture(cfg["coeffs"])

