"""The acceptance gate: eleven numerical checks, shared by the test suite and ``parisi selftest``."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .cascade import default_grid, expected_u_squared, phi00, solve_cascade, tilted_expectation
from .errors import NotAParisiMeasure
from .functional import LOG2, evaluate
from .legendre import (beta_convexity, concavity_certificate, default_panel, duality_forward,
                       duality_inverse, lhat_nonuniqueness)
from .minimize import MinimizedCurve, MinimizeOptions, minimize, temperature_scan
from .model import make_mixture, replica_symmetric, sk, validate_order_parameter
from .oracles import NestedQuadrature, central_difference, second_differences
from .rem import (GAMMA_C, gamma_rem, p_rem, rem_legendre_sup, rem_legendre_sup_numeric,
                  rem_variational_inf)
from .sde import martingale_check, simulate, variational_objective


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    budget: float = math.inf

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        over = "" if self.seconds <= self.budget else f" (over {self.budget:g}s budget)"
        return f"[{flag}] {self.number:2d} {self.name}: {self.detail} [{self.seconds:.1f}s{over}]"


# -- shared instances --------------------------------------------------------

GAMMA_GRID = np.linspace(0.1, 5.0, 25)


def random_instances(n: int = 10, seed: int = 20240611):
    """(mixture, op, gamma) with degree 2..4 mixtures normalized to xi'(1) = 1, k in 1..3."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        top = int(rng.integers(2, 5))
        c = rng.uniform(0.2, 1.0, top - 1)
        c /= math.sqrt(np.sum(np.arange(2, top + 1) * c ** 2))
        mix = make_mixture({p: float(v) for p, v in zip(range(2, top + 1), c)})
        k = int(rng.integers(1, 4))
        q = np.sort(rng.uniform(0.0, 1.0, k))
        m = np.sort(rng.uniform(0.0, 1.0, k - 1))
        op = validate_order_parameter(k, q, m)
        out.append((mix, op, float(rng.uniform(0.1, 5.0))))
    return out


def _timed(number, name, budget, fn: Callable[[], tuple]) -> CriterionResult:
    t = time.perf_counter()
    passed, detail = fn()
    return CriterionResult(number, name, bool(passed), detail, time.perf_counter() - t, budget)


# -- the criteria --------------------------------------------------------------

def rem_closed_forms():
    gammas = np.linspace(0.1, 10.0, 20) * GAMMA_C
    ms = np.linspace(0.05, 1.0, 20)
    err = 0.0
    for g in gammas:
        expected = g / 2 + LOG2 if g <= GAMMA_C else math.sqrt(2 * g * LOG2)
        err = max(err, abs(p_rem(g).p_hat - expected), abs(rem_variational_inf(g)[0] - expected))
    for m in ms:
        err = max(err, abs(gamma_rem(m).value - LOG2 / m))
    return err <= 1e-12, f"max error {err:.2e} (tol 1e-12)"


def rem_round_trip():
    ms = np.linspace(0.05, 1.0, 20)
    err = max(max(abs(rem_legendre_sup(m) - LOG2 / m), abs(rem_legendre_sup_numeric(m) - LOG2 / m))
              for m in ms)
    return err <= 1e-12, f"max |sup - log2/m| {err:.2e} (tol 1e-12)"


def sk_replica_symmetric():
    mix = sk()
    worst_v = worst_o = 0.0
    for g in (0.25, 0.64, 1.0):
        meas = minimize(mix, g, 2)
        worst_v = max(worst_v, abs(meas.value - (LOG2 + g / 4)))
        worst_o = max(worst_o, meas.overlap_moment)
    ok = worst_v <= 1e-6 and worst_o <= 1e-6
    return ok, f"max |value - (log2 + g/4)| {worst_v:.2e}, max overlap {worst_o:.2e} (tol 1e-6)"


def derivative_formula():
    worst = 0.0
    for mix, op, g in random_instances():
        grid = default_grid(mix, 5.2)
        ev = evaluate(mix, op, g, grid)
        fd = central_difference(lambda x: phi00(mix, op, x, grid), g, 1e-4 * max(1.0, g))
        worst = max(worst, abs(ev.dgamma_phi - fd) / abs(fd))
    return worst <= 1e-5, f"max relative error {worst:.2e} (tol 1e-5)"


def concavity():
    worst_g, worst_b = -math.inf, math.inf
    betas = np.linspace(math.sqrt(0.1), math.sqrt(5.0), 25)
    for mix, op, _ in random_instances():
        grid = default_grid(mix, 5.0)
        worst_g = max(worst_g, concavity_certificate(mix, op, GAMMA_GRID, grid))
        worst_b = min(worst_b, beta_convexity(mix, op, betas, grid))
    ok = worst_g <= 1e-8 and worst_b >= 0.0
    return ok, f"max second difference in gamma {worst_g:.2e} (tol 1e-8), min in beta {worst_b:.2e}"


def eu2_monotone():
    worst = math.inf
    for mix, op, _ in random_instances():
        grid = default_grid(mix, 5.0)
        table = np.array([expected_u_squared(solve_cascade(mix, op, g, grid)).eu2 for g in GAMMA_GRID])
        worst = min(worst, float(np.diff(table, axis=0).min()))
    return worst >= -1e-8, f"min increment of E u(q_b)^2 along gamma {worst:.2e} (tol -1e-8)"


def duality_forward_check():
    mix = sk()
    panel = default_panel()
    parts, ok = [], True
    for g in (0.64, 4.0):
        rep = duality_forward(mix, g, 2, panel=panel)
        slack = min(lhs - rep.p_min for _, lhs in rep.panel)
        ok = ok and rep.residual <= 1e-4 and rep.panel_ok
        parts.append(f"g={g:g}: residual {rep.residual:.2e}, min panel slack {slack:.2e}")
    return ok, "; ".join(parts)


def duality_inverse_check():
    mix = sk()
    curve = MinimizedCurve(mix, 2, MinimizeOptions())
    meas = curve(4.0)
    inv = duality_inverse(mix, meas.op, 4.0, curve=curve)
    nu = lhat_nonuniqueness(mix, 4.0, 2, curve)
    try:
        duality_inverse(mix, replica_symmetric(), 4.0, k=2, curve=curve)
        mismatch = False
    except NotAParisiMeasure:
        mismatch = True
    recon = max(abs(r - nu.p_min) for _, _, r in nu.witnesses)
    ok = inv.passed and nu.passed and mismatch
    return ok, (f"inverse residual {inv.residual:.2e}, argmax {inv.argmax_gamma:.4g}; "
                f"witness reconstruction error {recon:.2e}, L1 gap {nu.distance:.3f}; "
                f"mismatch detected {mismatch}")


def overlap_monotone():
    mix = sk()
    rows = temperature_scan(mix, [0.25, 1.0, 2.25, 4.0, 6.25], k=3)
    overlaps = [r.measure.overlap_moment for r in rows]
    mono = float(np.diff(overlaps).min())
    slope = max(abs(r.dvalue_fd - 0.5 * r.measure.int_alpha_xi_prime) for r in rows)
    bound = min(math.sqrt(2 * float(mix.xi(1.0)) * LOG2 / r.gamma) - r.measure.int_alpha_xi_prime
                for r in rows)
    ok = mono >= -1e-6 and slope <= 1e-4 and bound >= 0.0
    return ok, (f"min overlap increment {mono:.2e}, max |FD slope - I/2| {slope:.2e}, "
                f"min bound slack {bound:.3f}")


def sde_cross_oracle():
    mix = sk()
    meas = minimize(mix, 2.0, 2)
    sol = solve_cascade(mix, meas.op, 2.0)
    eu2 = expected_u_squared(sol).eu2
    opt = simulate(sol, 100_000, seed=0)
    mean, se = variational_objective(opt)
    zmean, zse = variational_objective(simulate(sol, 100_000, seed=1, control="zero"))
    rep = martingale_check(opt, eu2)
    eu2_ok = all(c.passed for c in rep.lines if c.name.startswith("eu2"))
    gap = (mean - sol.phi00) / se
    below = (sol.phi00 - zmean) / zse
    ok = abs(gap) <= 3 and below > 3 and eu2_ok
    return ok, (f"optimal objective {gap:+.2f} SE from Phi(0,0), zero control {below:.1f} SE below, "
                f"E u^2 checks {'ok' if eu2_ok else 'failed'}")


def brute_force():
    rng = np.random.default_rng(7)
    worst_phi = worst_t = 0.0
    for mix, _, g in random_instances(5, seed=11):
        k = int(rng.integers(1, 3))
        q = np.sort(rng.uniform(0.0, 1.0, k))
        m = np.sort(rng.uniform(0.0, 1.0, k - 1))
        op = validate_order_parameter(k, q, m)
        sol = solve_cascade(mix, op, g)
        nq = NestedQuadrature(mix, op, g)
        worst_phi = max(worst_phi, abs(sol.phi00 - nq.phi00()))
        for b in range(1, k + 2):
            f = lambda y: np.tanh(y) ** 2
            worst_t = max(worst_t, abs(tilted_expectation(sol, f, b) - nq.tilted_expectation(f, b)))
    ok = worst_phi <= 1e-7 and worst_t <= 1e-7
    return ok, f"max |Phi difference| {worst_phi:.2e}, max tilted difference {worst_t:.2e} (tol 1e-7)"


CRITERIA = (
    (1, "REM closed forms", 1.0, rem_closed_forms),
    (2, "REM Legendre round trip", 1.0, rem_round_trip),
    (3, "SK replica-symmetric region", 30.0, sk_replica_symmetric),
    (4, "gamma-derivative formula", 60.0, derivative_formula),
    (5, "concavity in gamma, convexity in beta", 60.0, concavity),
    (6, "E u^2 monotone in gamma", 60.0, eu2_monotone),
    (7, "Legendre duality, forward", 120.0, duality_forward_check),
    (8, "Legendre duality, inverse and L non-uniqueness", 120.0, duality_inverse_check),
    (9, "overlap monotonicity and derivative identity", 300.0, overlap_monotone),
    (10, "SDE cross-oracle", 300.0, sde_cross_oracle),
    (11, "brute-force nested quadrature", 60.0, brute_force),
)


def run_criterion(number: int) -> CriterionResult:
    for num, name, budget, fn in CRITERIA:
        if num == number:
            return _timed(num, name, budget, fn)
    raise KeyError(number)


def run_all(printer=print) -> list:
    results = []
    for num, _, _, _ in CRITERIA:
        res = run_criterion(num)
        if printer is not None:
            printer(res.line())
        results.append(res)
    return results
