"""Monte Carlo check of the cascade through its stochastic-control representation.

Time is measured in tau = xi'(s), in which the optimally controlled state is

    dX = gamma alpha u(tau, X) dtau + sqrt(gamma) dB_tau,   u = d/dx Psi,

and the objective is log cosh(X(1)) - (gamma / 2) int alpha u^2 dtau.  With the
optimal control its mean equals Psi(0, x), and the law of X at q_b is the
tilted law behind E u(q_b)^2.

Within a level Psi(s, .) is one Hopf-Cole step from the next level boundary,
so the control is tabulated on the cascade grid at every step start.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .cascade import GridFunction, LevelSolution, _even_step, gauss_hermite, log_cosh

CHUNK = 8192
DEFAULT_STEPS = 1000
MIN_STEPS = 200


@dataclass
class TimeGrid:
    taus: np.ndarray          # xi'-time nodes, containing every xi'(q_l)
    times: np.ndarray         # the same nodes in s in [0, 1]; exact at every q_l
    level: np.ndarray         # level index of each step [taus[n], taus[n + 1])
    checkpoints: np.ndarray   # node index of q_0, ..., q_{k+1}


def time_grid(sol: LevelSolution, n_steps: int = DEFAULT_STEPS) -> TimeGrid:
    """Uniform in xi'-time with the level boundaries inserted."""
    mix, qs = sol.mix, np.asarray(sol.op.qs)
    bounds = mix.dxi(qs)
    total = float(bounds[-1])
    uniform = np.linspace(0.0, total, n_steps + 1)
    gap = 1e-9 * total
    keep = np.min(np.abs(uniform[:, None] - bounds[None, :]), axis=1) > gap
    taus = np.union1d(uniform[keep], bounds)
    # s from tau by inverting xi' on a fine table, pinned exactly at the q_l
    s_fine = np.linspace(0.0, 1.0, 20001)
    times = np.interp(taus, mix.dxi(s_fine), s_fine)
    checkpoints = np.searchsorted(taus, bounds)
    times[checkpoints] = qs
    level = np.searchsorted(bounds, taus[:-1], side="right") - 1
    return TimeGrid(taus, times, np.minimum(level, sol.k), checkpoints)


@dataclass
class ControlTables:
    """u = d/dx Psi and w = d^2/dx^2 Psi on the grid at every step start (None where closed form)."""
    u: list
    w: list


def control_tables(sol: LevelSolution, tg: TimeGrid) -> ControlTables:
    grid = sol.grid
    nodes = gauss_hermite(grid.order)
    ms = sol.op.ms
    bounds = sol.mix.dxi(np.asarray(sol.op.qs))
    us, ws = [], []
    for n, l in enumerate(tg.level):
        if sol.closed_form[l] is not None:
            us.append(None)
            ws.append(None)
            continue
        # step from the nearest cascade node at or above tau
        delta = (bounds[l + 1] - bounds[l]) / sol.n_sub(l)
        j = min(int((bounds[l + 1] - tg.taus[n]) / delta + 1e-9), sol.n_sub(l) - 1) if delta > 0 else 0
        value, deriv = sol.node_reader(l, j)
        scale = math.sqrt(sol.gamma * max(bounds[l + 1] - j * delta - tg.taus[n], 0.0))
        _, d = _even_step(grid, scale, ms[l], value, deriv, nodes)
        us.append(d)
        ws.append(np.gradient(d, grid.spacing))
    return ControlTables(us, ws)


def _reader(sol, table):
    return GridFunction(table, sol.grid.half_width, sol.grid.spacing)


def boundary_control(sol: LevelSolution, b: int):
    """(u, w) readers for Psi(q_b, .) itself."""
    if sol.closed_form[b] is not None:
        return np.tanh, lambda y: 1.0 - np.tanh(y) ** 2
    d = sol.dpsi[b]
    return _reader(sol, d), _reader(sol, np.gradient(d, sol.grid.spacing))


@dataclass
class PathBatch:
    n_paths: int
    n_steps: int
    gamma: float
    x0: float
    control: str
    seed: int
    grid: TimeGrid
    solution: LevelSolution
    x_final: np.ndarray
    penalty: np.ndarray                  # (gamma / 2) int alpha u^2 dtau per path
    x_check: np.ndarray                  # state at each checkpoint, shape (k + 2, n_paths)
    wsq_check: Optional[np.ndarray] = None   # int_0^{q_b} alpha w^2 dtau per path
    paths: Optional[np.ndarray] = None       # full (X, u) history when recorded
    extra: dict = field(default_factory=dict)

    @property
    def objective(self) -> np.ndarray:
        return log_cosh(self.x_final) - self.penalty


def _simulate_chunk(sol, tg, tables, alphas, control, x0, rng, size, record):
    gamma = sol.gamma
    taus = tg.taus
    dt = np.diff(taus)
    sq = np.sqrt(gamma * dt)
    check_at = {int(c): i for i, c in enumerate(tg.checkpoints)}
    x = np.full(size, float(x0))
    pen = np.zeros(size)
    wsq = np.zeros(size)
    xc = np.empty((len(tg.checkpoints), size))
    wc = np.empty((len(tg.checkpoints), size))
    hist = np.empty((len(taus), 2, size)) if record else None
    optimal = control == "optimal"
    for n in range(len(dt)):
        if n in check_at:
            xc[check_at[n]] = x
            wc[check_at[n]] = wsq
        a = alphas[n]
        if control == "zero":
            u = np.zeros(size)
        elif optimal:
            if tables.u[n] is None:
                u = np.tanh(x)
                w = 1.0 - u * u
            else:
                u = _reader(sol, tables.u[n])(x)
                w = _reader(sol, tables.w[n])(x)
            wsq += a * w * w * dt[n]
        else:
            u = np.asarray(control(tg.times[n], x), dtype=float)
        if record:
            hist[n, 0], hist[n, 1] = x, u
        pen += 0.5 * gamma * a * u * u * dt[n]
        x = x + gamma * a * u * dt[n] + sq[n] * rng.standard_normal(size)
    last = len(taus) - 1
    xc[check_at[last]] = x
    wc[check_at[last]] = wsq
    if record:
        hist[last, 0], hist[last, 1] = x, np.nan
    return x, pen, xc, wc, hist


def simulate(sol: LevelSolution, n_paths: int, n_steps: int = DEFAULT_STEPS, seed: int = 0,
             control: Union[str, Callable] = "optimal", x0: float = 0.0,
             threads: int = 1, record_paths: bool = False) -> PathBatch:
    """Euler-Maruyama for the controlled state.

    ``control`` is "optimal" (u = d/dx Psi from the solved cascade), "zero",
    or a callable u(s, x).  Paths come in fixed chunks, each with its own
    child stream of one SeedSequence, so results do not depend on ``threads``.
    """
    if n_steps < MIN_STEPS:
        raise ValueError(f"n_steps must be at least {MIN_STEPS}, got {n_steps}")
    tg = time_grid(sol, n_steps)
    name = control if isinstance(control, str) else "custom"
    if name not in ("optimal", "zero", "custom"):
        raise ValueError(f"unknown control {control!r}")
    tables = control_tables(sol, tg) if name == "optimal" else None
    alphas = np.asarray(sol.op.ms)[tg.level]
    sizes = [min(CHUNK, n_paths - s) for s in range(0, n_paths, CHUNK)]
    streams = np.random.SeedSequence(seed).spawn(len(sizes))

    def run(i):
        rng = np.random.Generator(np.random.Philox(streams[i]))
        return _simulate_chunk(sol, tg, tables, alphas, control, x0, rng, sizes[i], record_paths)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(i) for i in range(len(sizes))]
    return PathBatch(
        n_paths=n_paths, n_steps=len(tg.taus) - 1, gamma=sol.gamma, x0=float(x0),
        control=name, seed=seed, grid=tg, solution=sol,
        x_final=np.concatenate([p[0] for p in parts]),
        penalty=np.concatenate([p[1] for p in parts]),
        x_check=np.concatenate([p[2] for p in parts], axis=1),
        wsq_check=np.concatenate([p[3] for p in parts], axis=1) if name == "optimal" else None,
        paths=np.concatenate([p[4] for p in parts], axis=2) if record_paths else None,
    )


def mean_se(values):
    v = np.asarray(values, dtype=float)
    if len(v) < 2:
        return float(v.mean()), 0.0
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(len(v)))


def variational_objective(batch: PathBatch):
    """(mean, standard error) of log cosh(X(1)) - (gamma / 2) int alpha u^2."""
    return mean_se(batch.objective)


@dataclass
class CheckLine:
    name: str
    value: float
    target: float
    se: float
    n_se: float = 3.0

    @property
    def passed(self) -> bool:
        diff = abs(self.value - self.target)
        return diff <= self.n_se * self.se or diff <= 1e-12

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "target": self.target,
                "se": self.se, "passed": self.passed}


@dataclass
class MartingaleReport:
    lines: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.lines)

    def to_dict(self) -> dict:
        return {"checks": [c.to_dict() for c in self.lines], "passed": self.passed}


def martingale_check(batch: PathBatch, eu2=None) -> MartingaleReport:
    """Check the two martingale identities of the optimally controlled state.

    At each checkpoint q_b: E u(q_b) = u(0, x0), E u(q_b)^2 = eu2[b] (when
    given), and E[w(q_b) - w(0)] = -gamma E int alpha w^2, with w = d/dx u.
    """
    if batch.control != "optimal":
        raise ValueError("martingale identities hold for the optimal control only")
    sol = batch.solution
    u0, w0 = boundary_control(sol, 0)
    u_start = float(u0(np.array([batch.x0]))[0])
    w_start = float(w0(np.array([batch.x0]))[0])
    lines = []
    for b in range(sol.k + 2):
        u, w = boundary_control(sol, b)
        xb = batch.x_check[b]
        ub = u(xb)
        m, se = mean_se(ub)
        lines.append(CheckLine(f"mean_u[{b}]", m, u_start, se))
        if eu2 is not None:
            m2, se2 = mean_se(ub * ub)
            lines.append(CheckLine(f"eu2[{b}]", m2, float(eu2[b]), se2))
        d = w(xb) - w_start + sol.gamma * batch.wsq_check[b]
        md, sed = mean_se(d)
        lines.append(CheckLine(f"second_identity[{b}]", md, 0.0, sed))
    return MartingaleReport(lines)


def paths_csv(batch: PathBatch, path) -> None:
    """Per-path history (path id, s, X, u); needs ``record_paths=True``."""
    if batch.paths is None:
        raise ValueError("batch was simulated without record_paths")
    times = batch.grid.times
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["path", "t", "X", "u"])
        for p in range(batch.n_paths):
            for n, t in enumerate(times):
                w.writerow([p, f"{t:.17g}", f"{batch.paths[n, 0, p]:.17g}",
                            f"{batch.paths[n, 1, p]:.17g}"])
