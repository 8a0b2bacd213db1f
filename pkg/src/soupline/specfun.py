"""Binomial and Poisson primitives: pmf, tails, partial ("ReLU") expectations, MGFs.

Everything is evaluated in log space through ``gammaln`` so that supplies of a
few hundred units never overflow.  Infinite Poisson sums are cut at an index
whose analytic remainder is below ``Tolerance.abs_eps``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import gammaln, xlog1py, xlogy

__all__ = [
    "PoissonParams",
    "BinomialParams",
    "Tolerance",
    "DEFAULT_TOLERANCE",
    "poisson_pmf",
    "poisson_tail",
    "poisson_below",
    "relu_expectation_poisson",
    "relu_expectation_binomial",
    "relu_expectations",
    "mgf",
    "poisson_truncation_index",
]

# largest argument for which math.exp stays finite
_MAX_EXP = 709.78


@dataclass(frozen=True)
class PoissonParams:
    mean: float

    def __post_init__(self):
        if not (math.isfinite(self.mean) and self.mean >= 0):
            raise ValueError(f"Poisson mean must be finite and >= 0, got {self.mean}")


@dataclass(frozen=True)
class BinomialParams:
    trials: int
    success_prob: float

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError(f"trials must be a positive integer, got {self.trials}")
        if not (0.0 <= self.success_prob <= 1.0):
            raise ValueError(f"success_prob must lie in [0, 1], got {self.success_prob}")

    @property
    def mean(self) -> float:
        return self.trials * self.success_prob


@dataclass(frozen=True)
class Tolerance:
    """Relative and absolute truncation targets for infinite sums."""

    rel_eps: float = 1e-12
    abs_eps: float = 1e-12

    def __post_init__(self):
        for name in ("rel_eps", "abs_eps"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")


DEFAULT_TOLERANCE = Tolerance()

Distribution = Union[PoissonParams, BinomialParams]


def _poisson_logpmf(mu: float, i: np.ndarray) -> np.ndarray:
    i = np.asarray(i, dtype=float)
    return xlogy(i, mu) - mu - gammaln(i + 1.0)


def _binomial_pmf_array(params: BinomialParams) -> np.ndarray:
    n, p = int(params.trials), float(params.success_prob)
    i = np.arange(n + 1, dtype=float)
    logc = gammaln(n + 1.0) - gammaln(i + 1.0) - gammaln(n - i + 1.0)
    return np.exp(logc + xlogy(i, p) + xlog1py(n - i, -p))


def _poisson_remainder_bound(mu: float, T: int) -> float:
    """Upper bound on both sum_{i>=T} pmf(i) and sum_{i>=T} i*pmf(i)."""
    if T <= mu + 1:
        return math.inf
    # geometric domination of the pmf ratio mu/(i+1) <= mu/T past T-1
    head = math.exp(float(_poisson_logpmf(mu, T - 1)))
    return max(1.0, mu) * head / (1.0 - mu / T)


def poisson_truncation_index(mu: float, tol: Tolerance = DEFAULT_TOLERANCE) -> int:
    """Smallest cut ``T >= mu + 10*sqrt(mu) + 50`` (doubled as needed) with remainder < abs_eps."""
    T = int(math.ceil(mu + 10.0 * math.sqrt(mu) + 50.0))
    while _poisson_remainder_bound(mu, T) >= tol.abs_eps:
        T *= 2
    return T


def poisson_pmf(params: PoissonParams, i: int) -> float:
    if i < 0:
        raise ValueError("i must be non-negative")
    if params.mean == 0.0:
        return 1.0 if i == 0 else 0.0
    return math.exp(float(_poisson_logpmf(params.mean, i)))


def poisson_tail(params: PoissonParams, threshold: float,
                 tol: Tolerance = DEFAULT_TOLERANCE) -> float:
    """P(Y >= threshold); an integer threshold includes its own atom."""
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    mu = params.mean
    m = int(math.ceil(threshold))
    if m <= 0:
        return 1.0
    if mu == 0.0:
        return 0.0
    if m <= mu:
        head = np.exp(_poisson_logpmf(mu, np.arange(m)))
        return float(min(1.0, max(0.0, 1.0 - head.sum())))
    T = max(poisson_truncation_index(mu, tol), m + 64)
    tail = np.exp(_poisson_logpmf(mu, np.arange(m, T + 1)))
    return float(min(1.0, tail.sum()))


def poisson_below(params: PoissonParams, threshold: float,
                  tol: Tolerance = DEFAULT_TOLERANCE) -> float:
    """P(Y < threshold), summed from whichever side avoids cancellation."""
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    mu = params.mean
    m = int(math.ceil(threshold))
    if m <= 0:
        return 0.0
    if mu == 0.0:
        return 1.0
    if m <= mu:
        return float(min(1.0, np.exp(_poisson_logpmf(mu, np.arange(m))).sum()))
    return max(0.0, 1.0 - poisson_tail(params, threshold, tol))


def relu_expectation_poisson(params: PoissonParams, knee: float,
                             tol: Tolerance = DEFAULT_TOLERANCE) -> float:
    """E[max(Y - knee, 0)] for Y ~ Poisson(mean)."""
    if not math.isfinite(knee):
        raise ValueError("knee must be finite")
    mu = params.mean
    if knee <= 0:
        return mu - knee
    if mu == 0.0:
        return 0.0
    if knee < mu:
        # mu - knee + E[max(knee - Y, 0)] is a finite sum with no cancellation issue here
        i = np.arange(int(math.floor(knee)) + 1)
        below = ((knee - i) * np.exp(_poisson_logpmf(mu, i))).sum()
        return float(mu - knee + below)
    m = int(math.floor(knee)) + 1
    T = max(poisson_truncation_index(mu, tol), m + 64)
    i = np.arange(m, T + 1)
    return float(((i - knee) * np.exp(_poisson_logpmf(mu, i))).sum())


def relu_expectation_binomial(params: BinomialParams, knee: float) -> float:
    """Exact E[max(X - knee, 0)] for X ~ Binomial(trials, success_prob)."""
    if not math.isfinite(knee):
        raise ValueError("knee must be finite")
    pmf = _binomial_pmf_array(params)
    i = np.arange(params.trials + 1, dtype=float)
    return float((np.maximum(i - knee, 0.0) * pmf).sum())


def _integer_pmf(dist: Distribution, upper: int, tol: Tolerance) -> np.ndarray:
    """pmf on 0..T where T covers ``upper`` and the truncation cut."""
    if isinstance(dist, BinomialParams):
        return _binomial_pmf_array(dist)
    mu = dist.mean
    if mu == 0.0:
        out = np.zeros(max(upper, 0) + 2)
        out[0] = 1.0
        return out
    T = max(poisson_truncation_index(mu, tol), upper + 2)
    return np.exp(_poisson_logpmf(mu, np.arange(T + 1)))


def relu_expectations(dist: Distribution, knees, tol: Tolerance = DEFAULT_TOLERANCE) -> np.ndarray:
    """Vectorised E[max(X - k, 0)] over non-negative integer knees.

    Uses reverse cumulative tails, so deep-tail values keep their relative
    accuracy instead of being lost to ``mean - knee`` cancellation.
    """
    knees = np.asarray(knees, dtype=np.int64)
    if knees.size == 0:
        return np.zeros(0)
    if knees.min() < 0:
        raise ValueError("knees must be non-negative integers")
    pmf = _integer_pmf(dist, int(knees.max()), tol)
    i = np.arange(pmf.size, dtype=float)
    # S0[k] = P(X > k), S1[k] = E[X 1(X > k)]
    s0 = np.concatenate([np.cumsum(pmf[::-1])[::-1][1:], [0.0]])
    s1 = np.concatenate([np.cumsum((i * pmf)[::-1])[::-1][1:], [0.0]])
    idx = np.minimum(knees, pmf.size - 1)
    out = s1[idx] - knees * s0[idx]
    return np.maximum(out, 0.0)


def mgf(dist: Distribution, lam: float) -> float:
    """Closed-form E[exp(lam * X)]; raises OverflowError instead of returning inf."""
    if not math.isfinite(lam):
        raise ValueError("lambda must be finite")
    if isinstance(dist, PoissonParams):
        log_value = dist.mean * math.expm1(lam) if dist.mean > 0 else 0.0
    else:
        p = dist.success_prob
        log_value = dist.trials * math.log1p(p * math.expm1(lam))
    if log_value > _MAX_EXP:
        raise OverflowError(
            f"MGF overflows: log E[exp(lam X)] = {log_value:.4g} at lambda={lam}")
    return math.exp(log_value)
