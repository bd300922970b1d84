"""Backward cascade for the Parisi PDE with a step-function order parameter.

On a stretch [q_l, q_{l+1}) where alpha = m_l the PDE is solved exactly by the
Hopf-Cole step

    Psi(q_l, x) = (1/m_l) log E exp(m_l Psi(q_{l+1}, x + sqrt(gamma) z_l)),
    Var z_l = xi'(q_{l+1}) - xi'(q_l),

so the whole solution is a finite recursion of Gaussian expectations.  Each
level is sampled on a uniform x-grid; expectations use Gauss-Hermite nodes and
off-grid reads use 4-point cubic interpolation with linear tails.

Gauss-Hermite loses accuracy once the step scale sqrt(gamma Var z_l) passes
about 1 (the integrands have poles at distance pi / 2 from the real axis), so a
wide level is split into equal sub-steps of scale at most MAX_SCALE (up to
MAX_SUBSTEPS of them).  Hopf-Cole steps with the same m compose exactly, so
this only adds grid nodes.

Levels whose m equals 1 sitting directly under the terminal condition are kept
in closed form, log cosh(x) + c, since E cosh(x + s z) = cosh(x) exp(s^2 / 2).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import GridTooNarrow, InvalidIntegrand, InvalidTemperature
from .model import Mixture, OrderParameter

M_SMALL = 1e-5      # below this (1/m) log E e^{m a} is summed as a cumulant series
MAX_SCALE = 1.0
MAX_SUBSTEPS = 8


def substeps(scale: float) -> int:
    """Number of equal-variance sub-steps keeping each below MAX_SCALE (at most MAX_SUBSTEPS).

    Past the cap the grid spacing, which grows with the total noise, limits
    accuracy anyway.
    """
    return min(MAX_SUBSTEPS, max(1, math.ceil((scale / MAX_SCALE) ** 2 - 1e-12)))


@lru_cache(maxsize=None)
def gauss_hermite(n: int):
    """Nodes and weights for E f(z), z ~ N(0, 1); weights sum to one."""
    z, w = np.polynomial.hermite_e.hermegauss(n)
    return z, w / w.sum()


@dataclass(frozen=True)
class GridSpec:
    half_width: float
    spacing: float
    order: int = 64

    def __post_init__(self):
        if not (self.half_width >= 8.0):
            raise ValueError(f"half_width must be at least 8, got {self.half_width}")
        if not (self.spacing > 0.0):
            raise ValueError("spacing must be positive")
        cells = self.half_width / self.spacing
        if abs(cells - round(cells)) > 1e-9 * max(1.0, cells):
            raise ValueError("half_width / spacing must be an integer")
        if self.order < 8 or self.order % 2:
            raise ValueError(f"quadrature order must be even and >= 8, got {self.order}")

    @property
    def cells(self) -> int:
        return int(round(self.half_width / self.spacing))

    @property
    def x(self) -> np.ndarray:
        n = self.cells
        return self.spacing * np.arange(-n, n + 1, dtype=float)

    def to_config(self) -> dict:
        return {"half_width": self.half_width, "spacing": self.spacing, "order": self.order}


def default_grid(mix: Mixture, gamma: float, order: int = 64, cells: int = 1024) -> GridSpec:
    """L = 8 + 4 sigma (at least 6 sigma), h = L / cells, sigma^2 = gamma xi'(1)."""
    sigma = math.sqrt(max(gamma, 0.0) * float(mix.dxi(1.0)))
    half = max(8.0 + 4.0 * sigma, 6.0 * sigma)
    return GridSpec(half, half / cells, order)


def log_cosh(x):
    x = np.abs(x)
    return x + np.log1p(np.exp(-2.0 * x)) - math.log(2.0)


class GridFunction:
    """Samples on a uniform symmetric grid, read with local cubic interpolation.

    Outside [-L, L] the function continues linearly with the given end slopes
    (pass zeros for a flat continuation).
    """

    def __init__(self, values, half_width, spacing, slopes=(0.0, 0.0)):
        self.values = np.asarray(values, dtype=float)
        self.half_width = half_width
        self.spacing = spacing
        self.slopes = slopes

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        f = self.values
        n = len(f) - 1
        L, h = self.half_width, self.spacing
        u = (np.clip(y, -L, L) + L) / h
        i = np.clip(np.floor(u).astype(np.intp), 1, n - 2)
        t = u - i
        tm1, tp1, tm2 = t - 1.0, t + 1.0, t - 2.0
        out = (-(t * tm1 * tm2) / 6.0 * f[i - 1]
               + (tp1 * tm1 * tm2) / 2.0 * f[i]
               - (tp1 * t * tm2) / 2.0 * f[i + 1]
               + (tp1 * t * tm1) / 6.0 * f[i + 2])
        lo, hi = y < -L, y > L
        if lo.any() or hi.any():
            out = np.where(lo, f[0] + self.slopes[0] * (y + L), out)
            out = np.where(hi, f[-1] + self.slopes[1] * (y - L), out)
        return out

    def shifted(self, rows, shift):
        """Reads at x[rows][:, None] + shift[None, :], x the function's own grid.

        Every point in a column sits at the same offset within its cell, so the
        cubic weights are per column and the reads are shifted slices of the
        samples padded with the linear tails.
        """
        h = self.spacing
        u = np.asarray(shift, dtype=float) / h
        n = np.floor(u).astype(np.intp)
        t = u - n
        tm1, tp1, tm2 = t - 1.0, t + 1.0, t - 2.0
        pad = int(np.abs(n).max()) + 3
        k = np.arange(1, pad + 1) * h
        f = np.concatenate([self.values[0] - self.slopes[0] * k[::-1], self.values,
                            self.values[-1] + self.slopes[1] * k])
        base = np.asarray(rows)[:, None] + (n + pad)[None, :]
        return (-(t * tm1 * tm2) / 6.0 * f[base - 1] + (tp1 * tm1 * tm2) / 2.0 * f[base]
                - (tp1 * t * tm2) / 2.0 * f[base + 1] + (tp1 * t * tm1) / 6.0 * f[base + 2])


@dataclass(frozen=True, eq=False)
class LevelSolution:
    """Psi(q_l, .) and its x-derivative sampled on the grid for l = 0..k+1."""

    mix: Mixture
    op: OrderParameter
    gamma: float
    grid: GridSpec
    psi: tuple
    dpsi: tuple
    variances: np.ndarray
    closed_form: tuple  # per level: constant c if Psi = log cosh + c, else None
    inner: tuple        # per level l < k + 1: (psi, dpsi) at interior sub-step nodes, top down
    _readers: dict = field(default_factory=dict, repr=False)

    @property
    def k(self) -> int:
        return self.op.k

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def phi00(self) -> float:
        return float(self.psi[0][self.grid.cells])

    def reader(self, level: int):
        """Callables (Psi(q_level, .), d/dx Psi(q_level, .)) valid on the whole line."""
        if level not in self._readers:
            c = self.closed_form[level]
            if c is not None:
                self._readers[level] = (lambda y, c=c: log_cosh(y) + c, np.tanh)
            else:
                self._readers[level] = _grid_readers(self.psi[level], self.dpsi[level], self.grid)
        return self._readers[level]

    def n_sub(self, level: int) -> int:
        return len(self.inner[level]) + 1

    def sub_scale(self, level: int) -> float:
        """Scale of one sub-step of level ``level``."""
        return math.sqrt(self.gamma * self.variances[level] / self.n_sub(level))

    def node_reader(self, level: int, j: int):
        """Readers at sub-step node j of ``level``: j = 0 is q_{level+1}, j = n_sub is q_level."""
        n = self.n_sub(level)
        if j == 0:
            return self.reader(level + 1)
        if j == n:
            return self.reader(level)
        key = (level, j)
        if key not in self._readers:
            if self.closed_form[level] is not None:
                c = self.closed_form[level + 1] + 0.5 * self.gamma * self.variances[level] * j / n
                self._readers[key] = (lambda y, c=c: log_cosh(y) + c, np.tanh)
            else:
                p, d = self.inner[level][j - 1]
                self._readers[key] = _grid_readers(p, d, self.grid)
        return self._readers[key]


def _grid_readers(psi, dpsi, grid: GridSpec):
    lo, hi = float(np.clip(dpsi[0], -1, 1)), float(np.clip(dpsi[-1], -1, 1))
    value = GridFunction(psi, grid.half_width, grid.spacing, (lo, hi))
    deriv = GridFunction(dpsi, grid.half_width, grid.spacing)
    return value, deriv


def _check_inputs(mix, op, gamma, grid):
    if not (gamma >= 0.0) or not math.isfinite(gamma):
        raise InvalidTemperature(f"gamma must be a finite nonnegative number, got {gamma!r}")
    sigma = math.sqrt(gamma * float(mix.dxi(1.0)))
    if grid.half_width < 6.0 * sigma:
        raise GridTooNarrow(
            f"half width {grid.half_width:g} does not contain 6 sigma = {6 * sigma:g} of total noise")


def _read(fn, points, shift, rows):
    if rows is not None and isinstance(fn, GridFunction):
        return fn.shifted(rows, shift)
    return fn(points[:, None] + shift[None, :])


def _step(points, scale, m, value, deriv=None, nodes=None, rows=None):
    """One Hopf-Cole step evaluated at ``points``.

    ``rows`` gives the grid indices of ``points`` when they are grid nodes of
    the same grid as ``value`` and ``deriv``, which allows the fast reads.
    Returns (Psi at points, dPsi at points or None).
    """
    if scale == 0.0:
        v = value(points)
        return v, (deriv(points) if deriv is not None else None)
    z, w = nodes
    shift = scale * z
    a = _read(value, points, shift, rows)
    if m == 0.0:
        psi = a @ w
        return psi, (_read(deriv, points, shift, rows) @ w if deriv is not None else None)
    ma = m * a
    top = ma.max(axis=1)
    e = np.exp(ma - top[:, None]) * w
    s = e.sum(axis=1)
    if m < M_SMALL:
        psi = small_m_log_mean(a, w, m)
    else:
        psi = (top + np.log(s)) / m
    if deriv is None:
        return psi, None
    return psi, (e * _read(deriv, points, shift, rows)).sum(axis=1) / s


def small_m_log_mean(a, w, m):
    """(1/m) log E e^{m a} = k1 + m k2 / 2 + m^2 k3 / 6 + O(m^3), k_j the cumulants of a.

    The direct form loses about 1e-16 / m to cancellation.
    """
    mean = a @ w
    d = a - mean[..., None]
    return mean + 0.5 * m * ((d * d) @ w) + (m * m / 6.0) * ((d * d * d) @ w)


def _even_step(grid: GridSpec, scale, m, value, deriv, nodes):
    """``_step`` on the grid using evenness: compute x >= 0, mirror the rest."""
    rows = np.arange(grid.cells, 2 * grid.cells + 1)
    p, d = _step(grid.x[rows], scale, m, value, deriv, nodes, rows)
    p = np.concatenate([p[:0:-1], p])
    if d is not None:
        d = np.concatenate([-d[:0:-1], d])
        d[grid.cells] = 0.0
    return p, d


def _closed_forms(op: OrderParameter, gamma: float, variances):
    k = op.k
    ms = op.ms
    consts = [None] * (k + 2)
    consts[k + 1] = 0.0
    for l in range(k, -1, -1):
        if ms[l] == 1.0 and consts[l + 1] is not None:
            consts[l] = consts[l + 1] + 0.5 * gamma * variances[l]
        else:
            break
    return consts


def level_variances(mix: Mixture, op: OrderParameter) -> np.ndarray:
    v = np.diff(mix.dxi(op.qs))
    return np.maximum(v, 0.0)


def solve_cascade(mix: Mixture, op: OrderParameter, gamma: float,
                  grid: Optional[GridSpec] = None) -> LevelSolution:
    """Backward sweep from the terminal log cosh down to level 0."""
    gamma = float(gamma)
    if grid is None:
        grid = default_grid(mix, max(gamma, 0.0))
    _check_inputs(mix, op, gamma, grid)
    k = op.k
    ms = op.ms
    variances = level_variances(mix, op)
    consts = _closed_forms(op, gamma, variances)
    x = grid.x
    nodes = gauss_hermite(grid.order)

    psi = [None] * (k + 2)
    dpsi = [None] * (k + 2)
    inner = [()] * (k + 1)
    readers = {}
    for l in range(k + 1, -1, -1):
        n = substeps(math.sqrt(gamma * variances[l])) if l <= k else 1
        if consts[l] is not None:
            psi[l] = log_cosh(x) + consts[l]
            dpsi[l] = np.tanh(x)
            readers[l] = (lambda y, c=consts[l]: log_cosh(y) + c, np.tanh)
            if l <= k:
                inner[l] = (None,) * (n - 1)
            continue
        value, deriv = readers[l + 1]
        scale = math.sqrt(gamma * variances[l] / n)
        tables = []
        for j in range(n):
            p, d = _even_step(grid, scale, ms[l], value, deriv, nodes)
            value, deriv = _grid_readers(p, d, grid)
            tables.append((p, d))
        psi[l], dpsi[l] = tables.pop()
        inner[l] = tuple(tables)
        readers[l] = (value, deriv)
    return LevelSolution(mix, op, gamma, grid, tuple(psi), tuple(dpsi), variances,
                         tuple(consts), tuple(inner), readers)


def phi00(mix: Mixture, op: OrderParameter, gamma: float,
          grid: Optional[GridSpec] = None) -> float:
    """Psi(0, 0) alone; skips derivatives and evaluates level 0 at x = 0 only."""
    gamma = float(gamma)
    if grid is None:
        grid = default_grid(mix, max(gamma, 0.0))
    _check_inputs(mix, op, gamma, grid)
    k = op.k
    ms = op.ms
    variances = level_variances(mix, op)
    consts = _closed_forms(op, gamma, variances)
    if consts[0] is not None:
        return consts[0]
    nodes = gauss_hermite(grid.order)
    z, w = nodes
    value = log_cosh
    steps = []
    for l in range(k, -1, -1):
        if consts[l] is not None:
            value = lambda y, c=consts[l]: log_cosh(y) + c
            continue
        total = math.sqrt(gamma * variances[l])
        if total > 0.0:
            n = substeps(total)
            steps += [(total / math.sqrt(n), ms[l])] * n
    if not steps:
        return float(value(np.zeros(1))[0])
    for scale, m in steps[:-2]:
        p, _ = _even_step(grid, scale, m, value, None, nodes)
        # slope at the edges of a convex even function tends to +-1
        slope = min(1.0, (p[-1] - p[-2]) / grid.spacing)
        value = GridFunction(p, grid.half_width, grid.spacing, (-slope, slope))
    # the last step is needed at x = 0 only, so the one before it only at its nodes
    last, m = steps[-1]
    pts = last * z
    if len(steps) >= 2:
        a = _step(pts, *steps[-2], value, None, nodes)[0]
    else:
        a = value(pts)
    if m == 0.0:
        return float(a @ w)
    if m < M_SMALL:
        return float(small_m_log_mean(a, w, m))
    top = m * a.max()
    return float((top + math.log(np.exp(m * a - top) @ w)) / m)


def phi_value(sol: LevelSolution, level: int, x):
    """Interpolated (Psi(q_level, x), d/dx Psi(q_level, x))."""
    if not 0 <= level <= sol.k + 1:
        raise IndexError(f"level {level} outside 0..{sol.k + 1}")
    value, deriv = sol.reader(level)
    xa = np.asarray(x, dtype=float)
    v, d = value(np.atleast_1d(xa)), deriv(np.atleast_1d(xa))
    if xa.ndim == 0:
        return float(v[0]), float(d[0])
    return v, d


def tilted_expectation(sol: LevelSolution, f: Callable, b: int, a: int = 0, x: float = 0.0) -> float:
    """E f(state at q_b) for the optimally controlled state started at x at time q_a.

    Gaussian increments between levels are reweighted by
    exp(m_l (Psi(q_{l+1}, .) - Psi(q_l, .))); the nested expectation is
    evaluated level by level on the grid rather than as a (b - a)-fold
    tensor product.
    """
    k = sol.k
    if not 0 <= a <= b <= k + 1:
        raise IndexError(f"need 0 <= a <= b <= {k + 1}, got a={a}, b={b}")
    ms = sol.op.ms
    nodes = gauss_hermite(sol.grid.order)
    grid = sol.grid

    def checked(y):
        out = np.asarray(f(y), dtype=float)
        if not np.all(np.isfinite(out)):
            raise InvalidIntegrand("integrand is not finite at the evaluation points")
        return np.broadcast_to(out, np.shape(y))

    if a == b:
        return float(checked(np.array([x]))[0])
    g = f if isinstance(f, GridFunction) and np.all(np.isfinite(f.values)) else checked
    z, w = nodes
    all_rows = np.arange(2 * grid.cells + 1)
    for l in range(b - 1, a - 1, -1):
        n = sol.n_sub(l)
        scale = sol.sub_scale(l)
        m = ms[l]
        for j in range(n):
            last = l == a and j == n - 1
            pts = np.array([float(x)]) if last else grid.x
            rows = None if last else all_rows
            if scale == 0.0:
                vals = g(pts)
            else:
                shift = scale * z
                gy = _read(g, pts, shift, rows)
                if m == 0.0:
                    vals = gy @ w
                else:
                    ma = m * _read(sol.node_reader(l, j)[0], pts, shift, rows)
                    e = np.exp(ma - ma.max(axis=1)[:, None]) * w
                    vals = (e * gy).sum(axis=1) / e.sum(axis=1)
            if last:
                return float(vals[0])
            g = GridFunction(vals, grid.half_width, grid.spacing)
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class TiltedValues:
    eu2: tuple


def expected_u_squared(sol: LevelSolution) -> TiltedValues:
    """E u(q_b)^2 = tilted expectation of (d/dx Psi(q_b, .))^2, for b = 0..k+1."""
    out = []
    grid = sol.grid
    for b in range(sol.k + 2):
        if sol.closed_form[b] is not None:
            f = lambda y: np.tanh(y) ** 2
        else:
            f = GridFunction(sol.dpsi[b] ** 2, grid.half_width, grid.spacing)
        out.append(tilted_expectation(sol, f, b))
    return TiltedValues(tuple(out))


def dump_levels_csv(sol: LevelSolution, path) -> None:
    qs = sol.op.qs
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["level", "q", "x", "psi", "dpsi"])
        for l in range(sol.k + 2):
            for xi, p, d in zip(sol.x, sol.psi[l], sol.dpsi[l]):
                w.writerow([l, f"{qs[l]:.17g}", f"{xi:.17g}", f"{p:.17g}", f"{d:.17g}"])
