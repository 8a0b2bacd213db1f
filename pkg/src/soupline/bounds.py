"""Availability/throughput bound families.

Every bound here comes in one of two directions:

* an *unavailability ceiling* -- an upper bound on ``1 - availability`` for a
  given throughput ``tau`` and supply ``kappa``;
* a *throughput floor* -- a lower bound on ``tau`` for a given availability.

Ceilings are produced by evaluating a convex function ``f`` on a binomial (or,
without a demand count, Poisson) variable whose mean is the absolute
throughput ``kappa * tau``, normalised by ``f(kappa)``.  The ReLU family with
the best knee dominates every other convex choice.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, InfeasibleMean, InvalidConvexSpec, NotInvertible
from .specfun import (
    BinomialParams,
    PoissonParams,
    mgf,
    relu_expectation_binomial,
    relu_expectation_poisson,
    relu_expectations,
)

log = logging.getLogger(__name__)

#: absolute bisection tolerance on throughput
INVERSION_TOL = 1e-10


# ---------------------------------------------------------------------------
# core data types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SupplyContext:
    """Supply ``kappa`` and, optionally, the number of independent demands."""

    kappa: float
    n: Optional[int] = None

    def __post_init__(self):
        if not (math.isfinite(self.kappa) and self.kappa > 0):
            raise DomainError(f"kappa must be a positive real, got {self.kappa}")
        if self.n is not None and (int(self.n) != self.n or self.n < 1):
            raise DomainError(f"n must be a positive integer, got {self.n}")

    def demand_distribution(self, mean: float):
        """Binomial(n, mean/n) when ``n`` is known, Poisson(mean) otherwise."""
        if self.n is None:
            return PoissonParams(mean)
        if mean > self.n * (1 + 1e-12):
            raise InfeasibleMean(f"mean {mean} exceeds the demand count n={self.n}")
        return BinomialParams(int(self.n), min(1.0, mean / self.n))

    @property
    def max_throughput(self) -> float:
        if self.n is None:
            return 1.0
        return min(1.0, self.n / self.kappa)


@dataclass(frozen=True)
class TradeoffPoint:
    availability: float
    throughput: float

    def __post_init__(self):
        for name in ("availability", "throughput"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {v}")


# ---------------------------------------------------------------------------
# convex functions usable as bound generators
# ---------------------------------------------------------------------------

class ConvexSpec:
    """Weakly convex, weakly positive function on [0, inf)."""

    def __call__(self, x):
        raise NotImplementedError

    def right_derivative(self, x: float) -> float:
        raise NotImplementedError

    def expectation(self, dist) -> float:
        """E[f(X)] for a Poisson or binomial ``dist``."""
        raise NotImplementedError


@dataclass(frozen=True)
class Relu(ConvexSpec):
    knee: float

    def __call__(self, x):
        return np.maximum(np.asarray(x, dtype=float) - self.knee, 0.0)

    def right_derivative(self, x):
        return 1.0 if x >= self.knee else 0.0

    def expectation(self, dist):
        if isinstance(dist, PoissonParams):
            return relu_expectation_poisson(dist, self.knee)
        return relu_expectation_binomial(dist, self.knee)


@dataclass(frozen=True)
class Exp(ConvexSpec):
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise InvalidConvexSpec("Exp requires lambda > 0")

    def __call__(self, x):
        return np.exp(self.lam * np.asarray(x, dtype=float))

    def right_derivative(self, x):
        return self.lam * math.exp(self.lam * x)

    def expectation(self, dist):
        return mgf(dist, self.lam)


@dataclass(frozen=True)
class ExpMinusOne(ConvexSpec):
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise InvalidConvexSpec("ExpMinusOne requires lambda > 0")

    def __call__(self, x):
        return np.expm1(self.lam * np.asarray(x, dtype=float))

    def right_derivative(self, x):
        return self.lam * math.exp(self.lam * x)

    def expectation(self, dist):
        return mgf(dist, self.lam) - 1.0


@dataclass(frozen=True)
class PiecewiseLinear(ConvexSpec):
    """``value_at_0 + slopes[0]*x`` bending upward at each breakpoint.

    ``slopes[k]`` applies on ``[breakpoints[k-1], breakpoints[k]]``, so there is
    one more slope than breakpoint.
    """

    breakpoints: tuple = ()
    slopes: tuple = (1.0,)
    value_at_0: float = 0.0

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        sl = tuple(float(s) for s in self.slopes)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "slopes", sl)
        if len(sl) != len(bp) + 1:
            raise InvalidConvexSpec("need exactly one more slope than breakpoints")
        if any(b < 0 for b in bp) or any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise InvalidConvexSpec("breakpoints must be non-negative and strictly ascending")
        if sl[0] < 0 or any(s2 < s1 for s1, s2 in zip(sl, sl[1:])):
            raise InvalidConvexSpec("slopes must be non-negative and non-decreasing")
        if self.value_at_0 < 0:
            raise InvalidConvexSpec("value_at_0 must be non-negative")

    def relu_terms(self):
        """(knee, weight) pairs such that f = value_at_0 + slopes[0]*x + sum w*relu(x - knee)."""
        return [(b, s2 - s1) for b, s1, s2 in zip(self.breakpoints, self.slopes, self.slopes[1:])]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self.value_at_0 + self.slopes[0] * x
        for knee, w in self.relu_terms():
            out = out + w * np.maximum(x - knee, 0.0)
        return out

    def right_derivative(self, x):
        k = int(np.searchsorted(self.breakpoints, x, side="right"))
        return self.slopes[k]

    def expectation(self, dist):
        total = self.value_at_0 + self.slopes[0] * dist.mean
        for knee, w in self.relu_terms():
            if w:
                total += w * Relu(knee).expectation(dist)
        return total


# ---------------------------------------------------------------------------
# bound families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OptimalRelu:
    name = "optimal-relu"


@dataclass(frozen=True)
class FixedConvex:
    f: ConvexSpec
    name = "fixed-convex"


@dataclass(frozen=True)
class ExpMinusOneClosedForm:
    name = "exp-minus-one"


@dataclass(frozen=True)
class ChernoffStyle:
    name = "chernoff-style"


BoundFamily = Union[OptimalRelu, FixedConvex, ExpMinusOneClosedForm, ChernoffStyle]

FAMILY_NAMES = ("optimal-relu", "exp-minus-one", "chernoff-style")


def family_from_name(name: str) -> BoundFamily:
    table = {"optimal-relu": OptimalRelu(), "exp-minus-one": ExpMinusOneClosedForm(),
             "chernoff-style": ChernoffStyle()}
    try:
        return table[name]
    except KeyError:
        raise DomainError(f"unknown bound family {name!r}") from None


@dataclass(frozen=True)
class UnavailabilityCeiling:
    """Upper bound on ``1 - availability``; values above 1 are valid but vacuous."""

    value: float
    family: BoundFamily
    witness: Optional[float] = None

    @property
    def vacuous(self) -> bool:
        return self.value >= 1.0


def _check_tau(tau: float):
    if not 0.0 <= tau <= 1.0:
        raise DomainError(f"throughput must lie in [0, 1], got {tau}")


def _check_alpha(alpha: float, closed: bool = False):
    hi_ok = alpha <= 1.0 if closed else alpha < 1.0
    if not (0.0 <= alpha and hi_ok):
        raise DomainError(f"availability out of range: {alpha}")


# ---------------------------------------------------------------------------
# ceilings
# ---------------------------------------------------------------------------

def generator_bound(ctx: SupplyContext, tau: float, f: ConvexSpec) -> UnavailabilityCeiling:
    """``E[f(X)] / f(kappa)`` with ``X`` of mean ``kappa * tau``."""
    _check_tau(tau)
    kappa = ctx.kappa
    f_kappa = float(f(kappa))
    if not f_kappa > 0:
        raise InvalidConvexSpec(f"f(kappa) must be positive, got {f_kappa}")
    if not f.right_derivative(kappa) > 0:
        raise InvalidConvexSpec("f must be strictly increasing at kappa")
    dist = ctx.demand_distribution(kappa * tau)
    return UnavailabilityCeiling(f.expectation(dist) / f_kappa, FixedConvex(f))


def _relu_candidates(kappa: float) -> np.ndarray:
    return np.arange(int(math.ceil(kappa)), dtype=np.int64)


def optimal_relu_bound(ctx: SupplyContext, tau: float) -> UnavailabilityCeiling:
    """Best ReLU ceiling over integer knees in ``[0, kappa)``.

    The partial expectation is affine in the knee between consecutive
    integers, so the ratio is monotone on each segment and the minimum sits on
    an integer knee.
    """
    _check_tau(tau)
    kappa = ctx.kappa
    dist = ctx.demand_distribution(kappa * tau)
    knees = _relu_candidates(kappa)
    values = relu_expectations(dist, knees) / (kappa - knees)
    j = int(np.argmin(values))
    return UnavailabilityCeiling(float(values[j]), OptimalRelu(), witness=float(knees[j]))


def premarkov_bound(ctx: SupplyContext, mu: float, overmean: float,
                    f: ConvexSpec) -> UnavailabilityCeiling:
    """``E[f(X)] / f(E[D | D >= kappa])`` with ``X`` of mean ``mu``."""
    if overmean < ctx.kappa - 1e-12:
        raise DomainError("overmean must be at least kappa")
    if mu < 0:
        raise InfeasibleMean("mu must be non-negative")
    if ctx.n is not None and overmean > ctx.n * (1 + 1e-12):
        raise InfeasibleMean("overmean cannot exceed the demand count")
    denom = float(f(overmean))
    if not denom > 0:
        raise InvalidConvexSpec("f(overmean) must be positive")
    dist = ctx.demand_distribution(mu)
    return UnavailabilityCeiling(f.expectation(dist) / denom, FixedConvex(f))


def chernoff_style_ceiling(kappa: float, tau: float) -> UnavailabilityCeiling:
    """Chernoff-shaped ceiling with the mean replaced by the absolute throughput.

    ``tau = 1`` degenerates to the vacuous ``exp(0) = 1``, which is returned.
    """
    if not kappa > 0:
        raise DomainError("kappa must be positive")
    _check_tau(tau)
    gap = kappa - kappa * tau
    if gap <= 0:
        return UnavailabilityCeiling(1.0, ChernoffStyle())
    value = math.exp(-0.5 * gap * gap / (kappa * tau + gap / 3.0))
    return UnavailabilityCeiling(value, ChernoffStyle())


def exp_minus_one_ceiling(ctx: SupplyContext, tau: float) -> UnavailabilityCeiling:
    """Generator bound for ``exp(lam x) - 1`` with ``lam`` minimised numerically."""
    _check_tau(tau)
    kappa = ctx.kappa
    if tau == 0:
        return UnavailabilityCeiling(0.0, ExpMinusOneClosedForm(), witness=None)
    dist = ctx.demand_distribution(kappa * tau)

    def log_ratio(lam):
        # log E[e^{lam X} - 1] - log(e^{lam kappa} - 1), kept finite for large lam
        if isinstance(dist, PoissonParams):
            log_m = dist.mean * math.expm1(lam)
        else:
            log_m = dist.trials * math.log1p(dist.success_prob * math.expm1(lam))
        num = log_m + math.log(-math.expm1(-log_m)) if log_m > 0 else -math.inf
        den = lam * kappa + math.log(-math.expm1(-lam * kappa))
        return num - den

    hi = max(2.0, 2.0 * math.log(2.0 + 1.0 / tau))
    res = minimize_scalar(log_ratio, bounds=(1e-8, hi), method="bounded",
                          options={"xatol": 1e-10})
    return UnavailabilityCeiling(math.exp(res.fun), ExpMinusOneClosedForm(), witness=float(res.x))


def unavailability_ceiling(ctx: SupplyContext, tau: float, family: BoundFamily) -> UnavailabilityCeiling:
    if isinstance(family, OptimalRelu):
        return optimal_relu_bound(ctx, tau)
    if isinstance(family, FixedConvex):
        return generator_bound(ctx, tau, family.f)
    if isinstance(family, ChernoffStyle):
        return chernoff_style_ceiling(ctx.kappa, tau)
    if isinstance(family, ExpMinusOneClosedForm):
        return exp_minus_one_ceiling(ctx, tau)
    raise DomainError(f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# floors
# ---------------------------------------------------------------------------

def exp_minus_one_lambda(kappa: float, delta: float) -> float:
    """Closed-form near-optimal lambda for the ``exp(lam x) - 1`` floor."""
    a = math.log(delta) / kappa
    return math.sqrt(-math.expm1(a)) - a


def exp_minus_one_floor_at(kappa: float, delta: float, lam: float) -> float:
    """``(1/kappa) ln(delta e^{lam kappa} + 1 - delta) / (e^lam - 1)``, valid for any lam > 0."""
    num = np.logaddexp(math.log(delta) + lam * kappa, math.log1p(-delta)) / kappa
    return float(num / math.expm1(lam))


def exp_minus_one_floor(kappa: float, delta: float) -> float:
    """Closed-form throughput floor at unavailability ``delta`` (``exp(lam x) - 1`` family)."""
    if not kappa > 0:
        raise DomainError("kappa must be positive")
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    a = math.log(delta) / kappa
    s = math.sqrt(-math.expm1(a))
    num = np.logaddexp(kappa * s, math.log1p(-delta)) / kappa
    return float(num / math.expm1(s - a))


def exp_minus_one_floor_optimized(kappa: float, delta: float):
    """Diagnostic: floor at the numerically best lambda.  Returns ``(floor, lam)``."""
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    lam0 = exp_minus_one_lambda(kappa, delta)
    res = minimize_scalar(lambda lam: -exp_minus_one_floor_at(kappa, delta, lam),
                          bounds=(1e-9, 4.0 * lam0 + 10.0), method="bounded",
                          options={"xatol": 1e-12})
    best = -res.fun
    # the bounded search can stall on a flat stretch; never report worse than the closed form
    closed = exp_minus_one_floor_at(kappa, delta, lam0)
    if closed > best:
        return closed, lam0
    return best, float(res.x)


def chernoff_style_floor(kappa: float, alpha: float) -> float:
    """Inverted Chernoff-style ceiling.  Can be negative for availability near 1."""
    if not kappa > 0:
        raise DomainError("kappa must be positive")
    _check_alpha(alpha)
    L = -math.log1p(-alpha) / kappa
    c = 2.0 * L / 3.0
    return 1.0 + c - math.sqrt(c * c + 2.0 * L)


def invert_ceiling_to_floor(ctx: SupplyContext, alpha: float, family: BoundFamily,
                            tol: float = INVERSION_TOL) -> float:
    """Smallest throughput whose ceiling still admits ``1 - alpha`` unavailability.

    Bisection on the monotone ceiling; the lower end of the final bracket is
    returned, which is always a valid floor.
    """
    if not isinstance(family, (OptimalRelu, FixedConvex)):
        raise NotInvertible(f"{family.name} is a closed-form floor; evaluate it directly")
    _check_alpha(alpha, closed=True)
    target = 1.0 - alpha

    def ceiling(t):
        return unavailability_ceiling(ctx, t, family).value

    lo, hi = 0.0, ctx.max_throughput
    if ceiling(lo) >= target:
        return 0.0
    if ceiling(hi) < target:
        log.warning("ceiling at maximal throughput is below %.3g; returning 1", target)
        return 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ceiling(mid) >= target:
            hi = mid
        else:
            lo = mid
    return lo


def throughput_floor(ctx: SupplyContext, alpha: float, family: BoundFamily) -> float:
    """Floor on throughput at availability ``alpha`` for any family.

    The endpoints use the families' limits: ``alpha = 0`` gives 1 everywhere;
    ``alpha = 1`` gives 0, except the Chernoff-style floor which tends to -1/2.
    """
    _check_alpha(alpha, closed=True)
    if isinstance(family, (OptimalRelu, FixedConvex)):
        return invert_ceiling_to_floor(ctx, alpha, family)
    if isinstance(family, ChernoffStyle):
        if alpha == 1.0:
            return -0.5
        return chernoff_style_floor(ctx.kappa, alpha)
    if isinstance(family, ExpMinusOneClosedForm):
        delta = 1.0 - alpha
        if delta <= 0.0:
            return 0.0
        if delta >= 1.0:
            return 1.0
        return exp_minus_one_floor(ctx.kappa, delta)
    raise DomainError(f"unknown family {family!r}")
