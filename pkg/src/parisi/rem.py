"""Random Energy Model: closed forms in gamma and a finite-N Monte Carlo check."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InvalidParameter, InvalidTemperature, ResourceLimit

LOG2 = math.log(2.0)
GAMMA_C = 2.0 * LOG2          # critical gamma, beta_c^2
MAX_N = 24
CHUNK = 1 << 16


@dataclass(frozen=True)
class RemPoint:
    gamma: float
    p_hat: float
    regime: str                # "high_temp" for gamma <= 2 log 2, else "low_temp"


def p_rem(gamma: float) -> RemPoint:
    """Limiting free energy: gamma / 2 + log 2 up to 2 log 2, sqrt(2 gamma log 2) beyond."""
    gamma = float(gamma)
    if not gamma >= 0.0 or math.isinf(gamma):
        raise InvalidTemperature(f"gamma must be nonnegative and finite, got {gamma!r}")
    if gamma <= GAMMA_C:
        return RemPoint(gamma, 0.5 * gamma + LOG2, "high_temp")
    return RemPoint(gamma, math.sqrt(2.0 * gamma * LOG2), "low_temp")


def p_rem_slope(gamma: float) -> float:
    """Derivative in gamma: 1/2, then sqrt(log 2 / (2 gamma))."""
    if gamma <= GAMMA_C:
        return 0.5
    return math.sqrt(LOG2 / (2.0 * gamma))


@dataclass(frozen=True)
class RemTransform:
    value: float
    argmax: tuple              # (lo, hi) interval; lo == hi for a single point


def gamma_rem(m: float) -> RemTransform:
    """sup over gamma of p_rem(gamma) - gamma m / 2 = log 2 / m.

    Maximizers: every gamma in (0, 2 log 2] when m = 1, else gamma = 2 log 2 / m^2.
    """
    m = float(m)
    if not (0.0 < m <= 1.0):
        raise InvalidParameter(f"m must lie in (0, 1], got {m!r}")
    if m == 1.0:
        return RemTransform(LOG2, (0.0, GAMMA_C))
    g = GAMMA_C / (m * m)
    return RemTransform(LOG2 / m, (g, g))


def rem_legendre_sup(m: float) -> float:
    """p_rem(gamma*) - gamma* m / 2 at the closed-form maximizer (the numeric round trip)."""
    g = gamma_rem(m).argmax[1]
    return p_rem(g).p_hat - 0.5 * g * m


def rem_legendre_sup_numeric(m: float) -> float:
    """The same sup found by bounded Brent search, without using the maximizer formula."""
    if not (0.0 < m <= 1.0):
        raise InvalidParameter(f"m must lie in (0, 1], got {m!r}")
    res = minimize_scalar(lambda g: 0.5 * g * m - p_rem(g).p_hat,
                          bounds=(0.0, 4.0 * GAMMA_C / (m * m)), method="bounded",
                          options={"xatol": 1e-12})
    return float(-res.fun)


def rem_variational_inf(gamma: float):
    """inf over m in (0, 1] of log 2 / m + gamma m / 2, returned as (value, argmin)."""
    gamma = float(gamma)
    if not gamma > 0.0:
        raise InvalidTemperature(f"gamma must be positive, got {gamma!r}")
    # stationarity -log 2 / m^2 + gamma / 2 = 0, clipped to m <= 1
    m = min(1.0, math.sqrt(GAMMA_C / gamma))
    return LOG2 / m + 0.5 * gamma * m, m


def _sample(n: int, gamma: float, rng: np.random.Generator) -> float:
    """(1/N) log sum over 2^N configurations of exp(sqrt(gamma N) X), streamed in chunks."""
    scale = math.sqrt(gamma * n)
    total = 1 << n
    acc = -math.inf
    for start in range(0, total, CHUNK):
        x = rng.standard_normal(min(CHUNK, total - start))
        acc = np.logaddexp(acc, np.logaddexp.reduce(scale * x))
    return float(acc) / n


def rem_finite_n_mc(n: int, samples: int, gamma: float, seed: int = 0):
    """Monte Carlo estimate of the finite-N free energy and its standard error.

    The energies are symmetric, so the sign in exp(-beta sqrt(N) X) is irrelevant.
    Each sample draws from its own child of one SeedSequence.
    """
    if n > MAX_N:
        raise ResourceLimit(f"N = {n} needs 2^{n} energies per sample; the limit is N <= {MAX_N}")
    if n < 1:
        raise InvalidParameter(f"N must be positive, got {n}")
    if samples < 16:
        raise InvalidParameter(f"need at least 16 samples, got {samples}")
    gamma = float(gamma)
    if not gamma >= 0.0:
        raise InvalidTemperature(f"gamma must be nonnegative, got {gamma!r}")
    if gamma == 0.0:
        return LOG2, 0.0
    children = np.random.SeedSequence(seed).spawn(samples)
    vals = np.array([_sample(n, gamma, np.random.default_rng(c)) for c in children])
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


def rem_csv(gammas) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("gamma", "p_rem", "regime"))
    for g in gammas:
        pt = p_rem(g)
        w.writerow((format(pt.gamma, ".17g"), format(pt.p_hat, ".17g"), pt.regime))
    return buf.getvalue()
