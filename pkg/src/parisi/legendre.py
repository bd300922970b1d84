"""Legendre transforms in gamma = beta^2 and numerical checks of the duality.

``gamma_hat`` maximizes the concave map gamma -> P(alpha, gamma) - gamma I / 2,
with I = int alpha xi', by root finding on its derivative.  ``l_hat`` does the
same over the minimized curve P(gamma).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .cascade import GridSpec, default_grid, phi00
from .errors import NotAParisiMeasure
from .functional import LOG2, evaluate
from .minimize import MinimizedCurve, MinimizeOptions, ParisiMeasure
from .model import Mixture, OrderParameter, alpha_moments, l1_distance, validate_order_parameter
from .oracles import second_differences

GAMMA_MIN = 1e-8
GAMMA_MAX = 1e6


@dataclass(frozen=True)
class LegendreOptions:
    slope_tol: float = 1e-9      # |derivative| below this counts as zero
    foc_tol: float = 1e-7        # first-order condition at an interior argmax
    gamma_max: float = GAMMA_MAX
    grid_order: int = 64


@dataclass(frozen=True)
class LegendreResult:
    value: float                  # +inf when divergent
    argmax_gamma: Optional[float]
    argmax_interval: Optional[tuple] = None   # set when the maximizers form a flat set
    slope_at_argmax: float = float("nan")
    divergent: bool = False

    @property
    def flat(self) -> bool:
        return self.argmax_interval is not None


def _objective(mix, op, integral, opts):
    """gamma -> (P(alpha, gamma) - gamma I / 2, its derivative)."""
    def f(gamma):
        ev = evaluate(mix, op, gamma, default_grid(mix, gamma, order=opts.grid_order))
        return ev.p_hat - 0.5 * gamma * integral, ev.dgamma_p - 0.5 * integral
    return f


def gamma_hat(mix: Mixture, op: OrderParameter, opts: Optional[LegendreOptions] = None) -> LegendreResult:
    """sup over gamma > 0 of P(alpha, gamma) - (gamma / 2) int alpha xi'."""
    opts = opts or LegendreOptions()
    integral = alpha_moments(op, mix).int_alpha_xi_prime
    f = _objective(mix, op, integral, opts)
    tol = opts.slope_tol

    _, d_lo = f(GAMMA_MIN)
    if d_lo <= tol:
        # nonincreasing from the start: the sup is the gamma -> 0 limit, log 2
        if d_lo < -tol:
            return LegendreResult(LOG2, GAMMA_MIN, slope_at_argmax=d_lo)
        right = _flat_end(f, tol, opts.gamma_max)
        return LegendreResult(LOG2, None, (0.0, right), slope_at_argmax=d_lo)

    lo, hi = GAMMA_MIN, 1.0
    d_hi = f(hi)[1]
    while d_hi > -tol:
        if d_hi > tol:
            lo = hi
        if hi >= opts.gamma_max:
            return LegendreResult(math.inf, None, slope_at_argmax=d_hi, divergent=True)
        hi = min(2.0 * hi, opts.gamma_max)
        d_hi = f(hi)[1]
    star = brentq(lambda g: f(g)[1], lo, hi, xtol=1e-13, rtol=1e-13, maxiter=200)
    val, slope = f(star)
    return LegendreResult(val, star, slope_at_argmax=slope)


def _flat_end(f, tol, gamma_max):
    """Right end of the set where the derivative stays within +-tol (inf if it never leaves)."""
    lo, hi = GAMMA_MIN, 1.0
    while f(hi)[1] >= -tol:
        lo = hi
        if hi >= gamma_max:
            return math.inf
        hi = min(4.0 * hi, gamma_max)
    for _ in range(60):
        mid = math.sqrt(lo * hi)
        if f(mid)[1] >= -tol:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1 + 1e-6:
            break
    return lo


# -- duality checks ----------------------------------------------------------

def default_panel() -> list:
    """Ten non-optimal order parameters: ladders and single interior atoms."""
    panel = []
    for k in range(1, 6):
        q = [j / (k + 1) for j in range(1, k + 1)]
        m = [j / k for j in range(1, k)]
        panel.append(validate_order_parameter(k, q, m))
    for t, mass in ((0.2, 0.5), (0.5, 0.5), (0.8, 0.3), (0.3, 0.9), (0.6, 0.1)):
        panel.append(validate_order_parameter(2, (0.0, t), (1.0 - mass,)))
    return panel


@dataclass
class DualityReport:
    gamma: float
    measure: ParisiMeasure
    gamma_hat: LegendreResult
    reconstruction: float
    p_min: float
    residual: float
    panel: list = field(default_factory=list)   # (op, Gamma(alpha) + gamma I / 2)
    panel_ok: bool = True
    tol: float = 1e-4

    @property
    def passed(self) -> bool:
        return self.residual <= self.tol and self.panel_ok

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "alpha_P": self.measure.op.to_config(),
            "gamma_hat": self.gamma_hat.value,
            "argmax_gamma": self.gamma_hat.argmax_gamma,
            "reconstruction": self.reconstruction,
            "p_min": self.p_min,
            "residual": self.residual,
            "panel": [{"alpha": op.to_config(), "lhs": lhs, "ok": lhs >= self.p_min - 1e-8}
                      for op, lhs in self.panel],
            "passed": self.passed,
        }


def duality_forward(mix: Mixture, gamma: float, k: int = 2,
                    opts: Optional[MinimizeOptions] = None,
                    lopts: Optional[LegendreOptions] = None,
                    panel: Optional[Sequence[OrderParameter]] = None,
                    curve: Optional[MinimizedCurve] = None, tol: float = 1e-4) -> DualityReport:
    """P(gamma) = inf_alpha (Gamma(alpha) + gamma I(alpha) / 2), attained at the Parisi measure."""
    curve = curve or MinimizedCurve(mix, k, opts or MinimizeOptions())
    meas = curve(gamma)
    gh = gamma_hat(mix, meas.op, lopts)
    recon = gh.value + 0.5 * gamma * meas.int_alpha_xi_prime
    report = DualityReport(gamma, meas, gh, recon, meas.value, abs(recon - meas.value), tol=tol)
    for op in (panel or ()):
        g = gamma_hat(mix, op, lopts)
        lhs = g.value + 0.5 * gamma * alpha_moments(op, mix).int_alpha_xi_prime
        report.panel.append((op, lhs))
        if not lhs >= meas.value - 1e-8:
            report.panel_ok = False
    return report


@dataclass
class InverseReport:
    gamma0: float
    gamma_hat: LegendreResult
    sup_value: float
    argmax_gamma: float
    near_maximizers: tuple        # grid gammas whose objective is within tol of the sup
    objective_at_gamma0: float
    residual: float
    tol: float = 1e-4

    @property
    def passed(self) -> bool:
        return self.residual <= self.tol and self.objective_at_gamma0 >= self.sup_value - self.tol

    def to_dict(self) -> dict:
        return {
            "gamma0": self.gamma0,
            "gamma_hat": self.gamma_hat.value,
            "sup_value": self.sup_value,
            "argmax_gamma": self.argmax_gamma,
            "objective_at_gamma0": self.objective_at_gamma0,
            "residual": self.residual,
            "passed": self.passed,
        }


def curve_options(seed: int = 0) -> MinimizeOptions:
    """Options for the cached minimized curve (warm-started points use fewer starts)."""
    return MinimizeOptions(seed=seed)


def duality_inverse(mix: Mixture, op: OrderParameter, gamma0: float, k: Optional[int] = None,
                    curve: Optional[MinimizedCurve] = None,
                    lopts: Optional[LegendreOptions] = None,
                    factors: Sequence[float] = (0.5, 0.75, 0.9, 1.0, 1.1, 1.25, 1.5),
                    gap_tol: float = 1e-6, residual_tol: float = 1e-4,
                    tol: float = 1e-4) -> InverseReport:
    """Gamma(alpha) = sup_gamma (P(gamma) - gamma I / 2) for a Parisi measure alpha.

    ``gamma0`` is the temperature the measure is claimed to come from; the
    claim is checked first by comparing P(alpha, gamma0) with the minimized
    value there.
    """
    k = op.k if k is None else k
    curve = curve or MinimizedCurve(mix, k, curve_options())
    ev = evaluate(mix, op, gamma0, default_grid(mix, gamma0))
    gap = ev.p_hat - curve.value(gamma0)
    pos, mass = op.atoms()
    keep = mass > 1e-10
    resid = np.abs(np.asarray(ev.eu2.eu2[: op.k + 1])[keep] - pos[keep])
    if gap > gap_tol or (resid.size and resid.max() > residual_tol):
        raise NotAParisiMeasure(
            f"not a Parisi measure at gamma={gamma0:g}: value gap {gap:.3g}, "
            f"max stationarity residual {resid.max() if resid.size else 0.0:.3g}")

    integral = ev.moments.int_alpha_xi_prime

    def objective(g):
        return curve.value(g) - 0.5 * g * integral

    gammas = sorted(gamma0 * f for f in factors)
    vals = [objective(g) for g in gammas]
    i = int(np.argmax(vals))
    lo = gammas[max(i - 1, 0)]
    hi = gammas[min(i + 1, len(gammas) - 1)]
    best_g, best_v = gammas[i], vals[i]
    if hi > lo:
        res = minimize_scalar(lambda g: -objective(g), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-3 * gamma0})
        if -res.fun > best_v:
            best_g, best_v = float(res.x), float(-res.fun)
    gh = gamma_hat(mix, op, lopts)
    near = tuple(g for g, v in zip(gammas, vals) if v >= best_v - tol)
    return InverseReport(gamma0, gh, best_v, best_g, near, objective(gamma0),
                         abs(best_v - gh.value), tol=tol)


# -- the alternative transform L ----------------------------------------------

@dataclass(frozen=True)
class LHatResult:
    value: float
    argmax_gamma: Optional[float]
    divergent: bool = False


def l_hat(mix: Mixture, op: OrderParameter, k: int = 2,
          curve: Optional[MinimizedCurve] = None, xatol: float = 1e-3) -> LHatResult:
    """sup over gamma >= 0 of P(gamma) - (gamma / 2) int alpha xi'.

    Infinite exactly when alpha vanishes on [0, 1).  Otherwise the derivative
    is negative beyond 2 xi(1) log 2 / I^2, which bounds the search.
    """
    integral = alpha_moments(op, mix).int_alpha_xi_prime
    if integral <= 0.0:
        return LHatResult(math.inf, None, divergent=True)
    curve = curve or MinimizedCurve(mix, k, curve_options())
    xi1 = float(mix.xi(1.0))
    upper = 2.0 * xi1 * LOG2 / integral ** 2

    def objective(g):
        return curve.value(g) - 0.5 * g * integral

    # coarse log-spaced bracket, then Brent's bounded search in the best cell
    gammas = list(np.geomspace(1e-3 * upper, upper, 9))
    vals = [objective(g) for g in gammas]
    i = int(np.argmax(vals))
    best_g, best_v = gammas[i], vals[i]
    if LOG2 >= best_v:
        best_g, best_v = 0.0, LOG2
    lo = gammas[max(i - 1, 0)]
    hi = gammas[min(i + 1, len(gammas) - 1)]
    # concavity puts the maximizer in the cells next to the best grid point
    res = minimize_scalar(lambda g: -objective(g), bounds=(lo, hi), method="bounded",
                          options={"xatol": xatol * max(1.0, lo)})
    if -res.fun > best_v:
        best_g, best_v = float(res.x), float(-res.fun)
    return LHatResult(best_v, best_g)


@dataclass
class NonUniquenessReport:
    gamma: float
    p_min: float
    target_integral: float
    witnesses: list          # (op, L(op), reconstruction)
    distance: float          # L1 distance between the two witnesses
    tol: float = 1e-4

    @property
    def passed(self) -> bool:
        return self.distance > 0.0 and all(abs(r - self.p_min) <= self.tol for _, _, r in self.witnesses)

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "p_min": self.p_min,
            "target_integral": self.target_integral,
            "witnesses": [{"alpha": op.to_config(), "l_hat": lv, "reconstruction": r}
                          for op, lv, r in self.witnesses],
            "l1_distance": self.distance,
            "passed": self.passed,
        }


def matching_witnesses(mix: Mixture, target: float, spots=(0.3, 0.7)) -> list:
    """Two-step order parameters alpha = m on [0, t), 1 on [t, 1] with int alpha xi' = target.

    The constraint m xi(t) + xi(1) - xi(t) = target is linear in m; distinct t
    give distinct witnesses.
    """
    xi1 = float(mix.xi(1.0))
    deficit = xi1 - target
    if deficit <= 0.0:
        raise ValueError("target equals xi(1): only alpha == 1 attains it")
    t_min = brentq(lambda t: float(mix.xi(t)) - deficit, 0.0, 1.0)
    out = []
    for s in spots:
        t = t_min + s * (1.0 - t_min)
        m = 1.0 - deficit / float(mix.xi(t))
        out.append(validate_order_parameter(2, (0.0, t), (m,)))
    return out


def lhat_nonuniqueness(mix: Mixture, gamma: float, k: int = 2,
                       curve: Optional[MinimizedCurve] = None, tol: float = 1e-4) -> NonUniquenessReport:
    """Two distinct alphas with int alpha xi' equal to that of the Parisi measure both attain
    inf_alpha (L(alpha) + gamma I(alpha) / 2) = P(gamma)."""
    curve = curve or MinimizedCurve(mix, k, curve_options())
    meas = curve(gamma)
    target = meas.int_alpha_xi_prime
    witnesses = []
    ops = matching_witnesses(mix, target)
    for op in ops:
        lh = l_hat(mix, op, k, curve)
        integral = alpha_moments(op, mix).int_alpha_xi_prime
        witnesses.append((op, lh.value, lh.value + 0.5 * gamma * integral))
    return NonUniquenessReport(gamma, meas.value, target, witnesses,
                               l1_distance(ops[0], ops[1]), tol=tol)


# -- concavity in gamma -----------------------------------------------------

def common_grid(mix: Mixture, gammas, order: int = 64) -> GridSpec:
    return default_grid(mix, max(gammas), order=order)


def concavity_certificate(mix: Mixture, op: OrderParameter, gamma_grid,
                          grid: Optional[GridSpec] = None) -> float:
    """Largest centered second difference of Psi(0, 0) over the gamma grid (<= 0 if concave)."""
    gammas = np.asarray(gamma_grid, dtype=float)
    grid = grid or common_grid(mix, gammas)
    vals = [phi00(mix, op, g, grid) for g in gammas]
    return float(second_differences(vals).max())


def beta_convexity(mix: Mixture, op: OrderParameter, beta_grid,
                   grid: Optional[GridSpec] = None) -> float:
    """Smallest centered second difference of Phi(0, 0) in beta (>= 0 if convex)."""
    betas = np.asarray(beta_grid, dtype=float)
    grid = grid or common_grid(mix, betas ** 2)
    vals = [phi00(mix, op, b * b, grid) for b in betas]
    return float(second_differences(vals).min())
