"""The exact availability/throughput frontier of Poisson-distributed total demand."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .bounds import TradeoffPoint
from .curves import CurveData
from .errors import DomainError, EmptyGrid
from .specfun import PoissonParams, poisson_below, relu_expectation_poisson

ALPHA_TOL = 1e-10


@dataclass(frozen=True)
class PoissonFrontierPoint:
    mean: float
    point: TradeoffPoint


def _clip01(v: float) -> float:
    # only absorbs rounding; anything further out is a real error
    if v < -1e-9 or v > 1 + 1e-9:
        raise ArithmeticError(f"value {v} outside [0, 1] beyond tolerance")
    return min(1.0, max(0.0, v))


def poisson_point(kappa: float, mu: float) -> PoissonFrontierPoint:
    if not kappa > 0:
        raise DomainError("kappa must be positive")
    if not (mu >= 0 and math.isfinite(mu)):
        raise DomainError("mu must be finite and non-negative")
    params = PoissonParams(mu)
    alpha = poisson_below(params, kappa)
    tau = (mu - relu_expectation_poisson(params, kappa)) / kappa
    return PoissonFrontierPoint(mu, TradeoffPoint(_clip01(alpha), _clip01(tau)))


def poisson_frontier_points(kappa: float, mu_grid) -> list:
    mu_grid = np.asarray(mu_grid, dtype=float)
    if mu_grid.size == 0:
        raise EmptyGrid("mu grid is empty")
    if np.any(np.diff(mu_grid) < 0):
        raise DomainError("mu grid must be ascending")
    return [poisson_point(kappa, float(mu)) for mu in mu_grid]


def poisson_frontier(kappa: float, mu_grid=None) -> CurveData:
    """Frontier sampled on ``mu_grid`` as (availability, throughput) rows."""
    if mu_grid is None:
        mu_grid = default_mu_grid(kappa)
    pts = poisson_frontier_points(kappa, mu_grid)
    rows = [(p.point.availability, p.point.throughput) for p in pts]
    meta = {"family": "poisson-benchmark", "kappa": float(kappa), "n_mode": "poisson",
            "grid": "mu", "mu_min": float(pts[0].mean), "mu_max": float(pts[-1].mean)}
    return CurveData("availability", "throughput", rows, meta)


def _mu_for_alpha(kappa: float, alpha: float) -> float:
    def gap(mu):
        return poisson_below(PoissonParams(mu), kappa) - alpha

    hi = kappa + 20.0 * math.sqrt(kappa) + 100.0
    while gap(hi) > 0:
        hi *= 2.0
    return brentq(gap, 0.0, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)


def poisson_tau_of_alpha(kappa: float, alpha: float) -> float:
    """Throughput of the Poisson demand whose availability equals ``alpha``."""
    if not kappa > 0:
        raise DomainError("kappa must be positive")
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    if alpha == 1.0:
        return 0.0
    mu = _mu_for_alpha(kappa, alpha)
    return poisson_point(kappa, mu).point.throughput


def default_mu_grid(kappa: float, points: int = 400, alpha_hi: float = 0.9999,
                    alpha_lo: float = 0.0001) -> np.ndarray:
    """Log-spaced means whose availabilities span ``alpha_hi`` down to ``alpha_lo``."""
    lo = _mu_for_alpha(kappa, alpha_hi)
    hi = _mu_for_alpha(kappa, alpha_lo)
    return np.geomspace(lo, hi, points)
