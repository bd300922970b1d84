"""Multi-start Nelder-Mead search for k-step Parisi measures and temperature scans."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize as nm_minimize

from .cascade import GridSpec, default_grid
from .errors import InvalidTemperature, UnsupportedOrder
from .functional import evaluate, p_hat_value, stationarity_residual
from .model import Mixture, OrderParameter, alpha_moments, validate_order_parameter

MAX_ORDER = 8


@dataclass(frozen=True)
class MinimizeOptions:
    starts: int = 8
    seed: int = 0
    max_restarts: int = 12
    restart_tol: float = 1e-10
    xatol: float = 1e-7
    fatol: float = 1e-12
    maxfev: int = 4000
    tie_tol: float = 1e-10
    # every start first gets a loose search; only the best few are polished
    screen_xatol: float = 1e-4
    screen_fatol: float = 1e-9
    screen_restarts: int = 2
    polish: int = 2
    polish_gap: float = 1e-6
    threads: int = 1
    grid: Optional[GridSpec] = None


@dataclass(frozen=True)
class ParisiMeasure:
    op: OrderParameter
    gamma: float
    value: float
    residuals: tuple
    overlap_moment: float
    int_alpha_xi_prime: float
    converged: bool = True
    evaluations: int = 0

    @property
    def max_residual(self) -> float:
        return max((abs(r) for r in self.residuals), default=0.0)


# -- reparametrization -------------------------------------------------------
#
# q_1..q_k are partial sums of k + 1 squared increments normalized to one, and
# m_1..m_{k-1} partial sums of k squared increments; every monotone (q, m)
# is reachable and the map is invariant under rescaling either block.

def n_params(k: int) -> int:
    return (k + 1) + (k if k >= 2 else 0)


def _partial_sums(inc):
    sq = np.square(inc)
    total = sq.sum()
    if total == 0.0:
        sq = np.ones_like(sq)
        total = sq.sum()
    return np.clip(np.cumsum(sq)[:-1] / total, 0.0, 1.0)


def params_to_qm(params, k: int):
    params = np.asarray(params, dtype=float)
    q = _partial_sums(params[: k + 1])
    m = _partial_sums(params[k + 1:]) if k >= 2 else np.zeros(0)
    return q, m


def params_to_op(params, k: int) -> OrderParameter:
    q, m = params_to_qm(params, k)
    return validate_order_parameter(k, q, m)


def embed(op: OrderParameter, k: int):
    """Raw (q, m) with exactly k levels describing the same alpha as ``op``."""
    if op.k > k:
        raise ValueError(f"cannot embed a {op.k}-step order parameter into {k} steps")
    q, m = list(op.q), list(op.m)
    if op.k == 0:
        return [0.0] * k, [1.0] * max(k - 1, 0)
    while len(q) < k:
        q.append(q[-1])
        m.append(1.0)
    return q, m


def qm_to_params(q, m, k: int) -> np.ndarray:
    qs = np.concatenate([[0.0], q, [1.0]])
    a = np.sqrt(np.maximum(np.diff(qs), 0.0))
    if k < 2:
        return a
    ms = np.concatenate([[0.0], m, [1.0]])
    return np.concatenate([a, np.sqrt(np.maximum(np.diff(ms), 0.0))])


def op_to_params(op: OrderParameter, k: Optional[int] = None) -> np.ndarray:
    k = op.k if k is None else k
    q, m = embed(op, k)
    return qm_to_params(q, m, k)


def starting_points(k: int, count: int, seed: int, warm: Sequence[OrderParameter] = ()):
    """Warm starts first, then alpha == 1, an equispaced ladder and seeded random draws."""
    pts = [op_to_params(op, k) for op in warm]
    pts.append(qm_to_params(*embed(OrderParameter(0, (), ()), k), k))
    ladder_q = np.arange(1, k + 1) / (k + 1)
    ladder_m = np.arange(1, k) / k
    pts.append(qm_to_params(ladder_q, ladder_m, k))
    rng = np.random.default_rng(seed)
    while len(pts) < count + len(warm):
        q = np.sort(rng.uniform(0.0, 1.0, k))
        m = np.sort(rng.uniform(0.0, 1.0, max(k - 1, 0)))
        pts.append(qm_to_params(q, m, k))
    return pts


def _simplex(x0, scale=0.15):
    n = len(x0)
    sim = np.tile(x0, (n + 1, 1))
    for i in range(n):
        sim[i + 1, i] += scale if x0[i] < 0.5 else -scale
    return sim


def _local_search(objective, x0, opts: MinimizeOptions, screen: bool = False, scale: float = 0.15):
    """Nelder-Mead restarted from its own optimum until a cycle gains < restart_tol."""
    x, fx = np.asarray(x0, dtype=float), objective(x0)
    nfev = 1
    converged = False
    xatol, fatol = (opts.screen_xatol, opts.screen_fatol) if screen else (opts.xatol, opts.fatol)
    cycles = opts.screen_restarts if screen else opts.max_restarts
    for cycle in range(cycles):
        res = nm_minimize(objective, x, method="Nelder-Mead",
                          options={"initial_simplex": _simplex(x, scale / (1 + cycle)),
                                   "xatol": xatol, "fatol": fatol,
                                   "maxfev": opts.maxfev, "adaptive": True})
        nfev += res.nfev
        gain = fx - res.fun
        if res.fun < fx:
            x, fx = res.x, res.fun
        if gain < opts.restart_tol:
            converged = True
            break
    return x, fx, converged, nfev


def minimize(mix: Mixture, gamma: float, k: int = 3, opts: Optional[MinimizeOptions] = None,
             warm: Sequence[OrderParameter] = ()) -> ParisiMeasure:
    """Approximate Parisi measure among k-step order parameters."""
    opts = opts or MinimizeOptions()
    if k > MAX_ORDER:
        raise UnsupportedOrder(f"k = {k} exceeds the supported maximum {MAX_ORDER}")
    if k < 0:
        raise UnsupportedOrder(f"k must be nonnegative, got {k}")
    if not (gamma > 0.0) or not math.isfinite(gamma):
        raise InvalidTemperature(f"gamma must be positive, got {gamma!r}")
    grid = opts.grid or default_grid(mix, gamma)

    def objective(params):
        return p_hat_value(mix, params_to_op(params, k), gamma, grid)

    if k == 0:
        return _measure(mix, OrderParameter(0, (), ()), gamma, grid, True, 1)

    starts = starting_points(k, opts.starts, opts.seed, warm)

    def run_all(fn, points):
        if opts.threads > 1:
            with ThreadPoolExecutor(opts.threads) as pool:
                return list(pool.map(fn, points))
        return [fn(x0) for x0 in points]

    screened = run_all(lambda x0: _local_search(objective, x0, opts, screen=True), starts)
    order = sorted(range(len(screened)), key=lambda i: screened[i][1])
    lead = screened[order[0]][1]
    keep = [i for i in order[: opts.polish] if screened[i][1] <= lead + opts.polish_gap] or order[:1]
    runs = run_all(lambda i: _local_search(objective, screened[i][0], opts, scale=0.02), keep)
    screen_fev = sum(r[3] for r in screened)

    best = min(fx for _, fx, _, _ in runs)
    ties = [r for r in runs if r[1] <= best + opts.tie_tol]
    ops = [params_to_op(r[0], k) for r in ties]
    pick = min(range(len(ties)),
               key=lambda i: (alpha_moments(ops[i], mix).int_alpha_xi_prime, ties[i][1]))
    nfev = screen_fev + sum(r[3] for r in runs)
    return _measure(mix, ops[pick], gamma, grid, ties[pick][2], nfev)


def _measure(mix, op, gamma, grid, converged, nfev) -> ParisiMeasure:
    ev = evaluate(mix, op, gamma, grid)
    res = stationarity_residual(mix, op, gamma, evaluation=ev)
    return ParisiMeasure(op=op, gamma=float(gamma), value=ev.p_hat,
                         residuals=tuple(float(r) for r in res),
                         overlap_moment=ev.moments.int_xi_dalpha,
                         int_alpha_xi_prime=ev.moments.int_alpha_xi_prime,
                         converged=converged, evaluations=nfev)


def overlap_moment(op: OrderParameter, mix: Mixture) -> float:
    """int xi d alpha = sum over atoms of mass * xi(position)."""
    return alpha_moments(op, mix).int_xi_dalpha


# -- temperature scans -------------------------------------------------------

SCAN_COLUMNS = ("gamma", "beta", "value", "dvalue_fd", "int_alpha_xiprime",
                "overlap_moment", "max_residual", "converged")


@dataclass
class ScanRow:
    gamma: float
    measure: ParisiMeasure
    dvalue_fd: float = float("nan")

    def as_tuple(self):
        m = self.measure
        return (self.gamma, math.sqrt(self.gamma), m.value, self.dvalue_fd,
                m.int_alpha_xi_prime, m.overlap_moment, m.max_residual, m.converged)


@dataclass
class MinimizedCurve:
    """Cache of minimizers over gamma, warm-started from the nearest cached gamma.

    Once a warm start exists only ``warm_starts`` extra starts (alpha == 1 and
    the ladder at the default of 2) join it; alpha_P moves continuously in gamma.
    """

    mix: Mixture
    k: int
    opts: MinimizeOptions = field(default_factory=MinimizeOptions)
    cache: dict = field(default_factory=dict)
    warm_starts: int = 2

    def __call__(self, gamma: float) -> ParisiMeasure:
        gamma = float(gamma)
        if gamma not in self.cache:
            warm, opts = [], self.opts
            if self.cache:
                near = min(self.cache, key=lambda g: abs(g - gamma))
                warm = [self.cache[near].op]
                opts = replace(self.opts, starts=min(self.opts.starts, self.warm_starts))
            self.cache[gamma] = minimize(self.mix, gamma, self.k, opts, warm=warm)
        return self.cache[gamma]

    def value(self, gamma: float) -> float:
        return self(gamma).value


def fd_step(gamma: float) -> float:
    return 1e-3 * max(1.0, gamma)


def temperature_scan(mix: Mixture, gamma_grid: Sequence[float], k: int = 3,
                     opts: Optional[MinimizeOptions] = None, fd: bool = True,
                     curve: Optional[MinimizedCurve] = None) -> list:
    """Minimize at each gamma in ascending order, warm-starting from the previous minimizer."""
    gammas = [float(g) for g in gamma_grid]
    if any(b <= a for a, b in zip(gammas, gammas[1:])):
        raise ValueError("gamma grid must be strictly increasing")
    curve = curve or MinimizedCurve(mix, k, opts or MinimizeOptions())
    rows = []
    for g in gammas:
        row = ScanRow(g, curve(g))
        if fd:
            h = fd_step(g)
            row.dvalue_fd = (curve.value(g + h) - curve.value(g - h)) / (2 * h)
        rows.append(row)
    return rows


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return format(float(v), ".17g")


def scan_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCAN_COLUMNS)
    for r in rows:
        w.writerow([_fmt(v) for v in r.as_tuple()])
    return buf.getvalue()
