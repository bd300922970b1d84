"""The reparametrized Parisi functional P(alpha, gamma) and its gamma-derivative."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import __version__
from .cascade import (GridSpec, LevelSolution, TiltedValues, default_grid, expected_u_squared,
                      phi00, solve_cascade)
from .model import AlphaMoments, Mixture, OrderParameter, alpha_moments

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class Evaluation:
    gamma: float
    p_hat: float
    phi00: float
    eu2: TiltedValues
    dgamma_phi: float
    dgamma_p: float
    moments: AlphaMoments
    # dP/dgamma through int alpha xi' - int xi' (E u^2 - s) dalpha; equals dgamma_p up to rounding
    dgamma_p_alt: float = float("nan")

    def to_dict(self, grid: Optional[GridSpec] = None) -> dict:
        out = {
            "gamma": self.gamma,
            "p_hat": self.p_hat,
            "phi00": self.phi00,
            "eu2": list(self.eu2.eu2),
            "dgamma_phi": self.dgamma_phi,
            "dgamma_p": self.dgamma_p,
            "dgamma_p_alt": self.dgamma_p_alt,
            "moments": asdict(self.moments),
            "version": __version__,
        }
        if grid is not None:
            out["grid"] = grid.to_config()
        return out


def p_hat_value(mix: Mixture, op: OrderParameter, gamma: float,
                grid: Optional[GridSpec] = None) -> float:
    """log 2 + Psi(0, 0) - (gamma / 2) int alpha s xi''; the value only."""
    mom = alpha_moments(op, mix)
    return LOG2 + phi00(mix, op, gamma, grid) - 0.5 * gamma * mom.int_alpha_s_xi2


def derivative_terms(mix: Mixture, op: OrderParameter, eu2, moments: AlphaMoments):
    """(d/dgamma Psi(0,0), d/dgamma P) from E u^2 at the atoms of dalpha.

    The first uses xi'(1) - int xi' E u^2 dalpha; the second the form
    int alpha xi' - int xi' (E u^2 - s) dalpha.
    """
    pos, mass = op.atoms()
    eu2 = np.asarray(eu2[: op.k + 1])
    dxi_pos = mix.dxi(pos)
    dphi = 0.5 * (float(mix.dxi(1.0)) - float(np.sum(mass * dxi_pos * eu2)))
    dp = 0.5 * (moments.int_alpha_xi_prime - float(np.sum(mass * dxi_pos * (eu2 - pos))))
    return dphi, dp


def evaluate(mix: Mixture, op: OrderParameter, gamma: float,
             grid: Optional[GridSpec] = None, solution: Optional[LevelSolution] = None) -> Evaluation:
    if solution is None:
        solution = solve_cascade(mix, op, gamma, grid)
    tv = expected_u_squared(solution)
    mom = alpha_moments(op, mix)
    phi = solution.phi00
    dphi, dp_alt = derivative_terms(mix, op, tv.eu2, mom)
    ev = Evaluation(
        gamma=float(gamma),
        p_hat=LOG2 + phi - 0.5 * gamma * mom.int_alpha_s_xi2,
        phi00=phi,
        eu2=tv,
        dgamma_phi=dphi,
        dgamma_p=dphi - 0.5 * mom.int_alpha_s_xi2,
        moments=mom,
        dgamma_p_alt=dp_alt,
    )
    return ev


def stationarity_residual(mix: Mixture, op: OrderParameter, gamma: float,
                          grid: Optional[GridSpec] = None, evaluation: Optional[Evaluation] = None,
                          min_mass: float = 1e-10) -> np.ndarray:
    """E u(q)^2 - q at every atom of dalpha carrying mass above ``min_mass``.

    A Parisi measure has E u(q)^2 = q on its support, so small residuals are a
    necessary (not sufficient) certificate.
    """
    if evaluation is None:
        evaluation = evaluate(mix, op, gamma, grid)
    pos, mass = op.atoms()
    eu2 = np.asarray(evaluation.eu2.eu2[: op.k + 1])
    keep = mass > min_mass
    return eu2[keep] - pos[keep]


def grid_for(mix: Mixture, gamma: float, grid: Optional[GridSpec]) -> GridSpec:
    return grid if grid is not None else default_grid(mix, gamma)
