"""Ground-truth engines for checking the bounds.

Exact enumeration covers finitely supported demands (Bernoulli, point masses
and finite mixtures); Monte Carlo covers everything else.  The verification
helpers return plain report objects that serialise to JSON.

Monte Carlo streams: the root ``seed`` feeds ``numpy.random.SeedSequence``;
sample block ``k`` (``MC_BLOCK`` samples each) draws from
``Generator(PCG64(root.spawn(n_blocks)[k]))`` and samples the agents in spec
order.  Results therefore depend only on ``(spec, kappa, samples, seed)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .benchmark import poisson_tau_of_alpha
from .bounds import (
    ChernoffStyle,
    ConvexSpec,
    ExpMinusOne,
    ExpMinusOneClosedForm,
    FixedConvex,
    OptimalRelu,
    PiecewiseLinear,
    Relu,
    SupplyContext,
    exp_minus_one_floor,
    unavailability_ceiling,
)
from .errors import InvalidConvexSpec, TooLarge, UnsupportedDistribution
from .specfun import BinomialParams, PoissonParams

MAX_EXACT_AGENTS = 20
MAX_OUTCOMES = 2 ** 20
MC_BLOCK = 65536
SLACK = 1e-9


# ---------------------------------------------------------------------------
# per-agent distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Bernoulli:
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"Bernoulli p must lie in [0, 1], got {self.p}")

    @property
    def mean(self):
        return self.p

    def atoms(self):
        vals = [v for v, w in ((0.0, 1.0 - self.p), (1.0, self.p)) if w > 0]
        probs = [w for w in (1.0 - self.p, self.p) if w > 0]
        return np.array(vals), np.array(probs)

    def sample(self, rng, size):
        return (rng.random(size) < self.p).astype(float)


@dataclass(frozen=True)
class PointMass:
    v: float

    def __post_init__(self):
        if not 0.0 <= self.v <= 1.0:
            raise ValueError(f"point mass must lie in [0, 1], got {self.v}")

    @property
    def mean(self):
        return self.v

    def atoms(self):
        return np.array([self.v]), np.array([1.0])

    def sample(self, rng, size):
        return np.full(size, self.v)


@dataclass(frozen=True)
class Uniform:
    a: float
    b: float

    def __post_init__(self):
        if not 0.0 <= self.a <= self.b <= 1.0:
            raise ValueError(f"need 0 <= a <= b <= 1, got ({self.a}, {self.b})")

    @property
    def mean(self):
        return 0.5 * (self.a + self.b)

    def atoms(self):
        if self.a == self.b:
            return np.array([self.a]), np.array([1.0])
        raise UnsupportedDistribution("Uniform demand cannot be enumerated exactly")

    def sample(self, rng, size):
        return rng.uniform(self.a, self.b, size)


@dataclass(frozen=True)
class FiniteMixture:
    weights: tuple
    atoms_: tuple

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        a = tuple(float(x) for x in self.atoms_)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "atoms_", a)
        if len(w) != len(a) or not w:
            raise ValueError("weights and atoms must be non-empty and the same length")
        if any(x < 0 for x in w) or abs(sum(w) - 1.0) > 1e-9:
            raise ValueError("weights must be non-negative and sum to 1")
        if any(not 0.0 <= x <= 1.0 for x in a):
            raise ValueError("atoms must lie in [0, 1]")

    @property
    def mean(self):
        return float(np.dot(self.weights, self.atoms_))

    def atoms(self):
        w = np.array(self.weights)
        keep = w > 0
        return np.array(self.atoms_)[keep], w[keep]

    def sample(self, rng, size):
        return rng.choice(np.array(self.atoms_), size=size, p=np.array(self.weights))


def _dist_to_dict(d):
    if isinstance(d, FiniteMixture):
        return {"kind": "mixture", "weights": list(d.weights), "atoms": list(d.atoms_)}
    return {"kind": type(d).__name__.lower(), **asdict(d)}


@dataclass(frozen=True)
class DemandSpec:
    agents: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))

    @property
    def n(self) -> int:
        return len(self.agents)

    @property
    def mean(self) -> float:
        return float(sum(a.mean for a in self.agents))

    @property
    def enumerable(self) -> bool:
        if self.n > MAX_EXACT_AGENTS:
            return False
        count = 1
        for a in self.agents:
            try:
                count *= len(a.atoms()[0])
            except UnsupportedDistribution:
                return False
        return count <= MAX_OUTCOMES

    def to_dict(self):
        return {"agents": [_dist_to_dict(a) for a in self.agents]}


# ---------------------------------------------------------------------------
# exact enumeration
# ---------------------------------------------------------------------------

def enumerate_outcomes(spec: DemandSpec):
    """All joint outcomes of ``spec`` as parallel arrays ``(total_demand, probability)``."""
    if spec.n > MAX_EXACT_AGENTS:
        raise TooLarge(f"{spec.n} agents exceeds the exact limit of {MAX_EXACT_AGENTS}")
    totals = np.zeros(1)
    probs = np.ones(1)
    for agent in spec.agents:
        vals, w = agent.atoms()
        if totals.size * vals.size > MAX_OUTCOMES:
            raise TooLarge(f"more than {MAX_OUTCOMES} joint outcomes")
        totals = (totals[:, None] + vals[None, :]).ravel()
        probs = (probs[:, None] * w[None, :]).ravel()
    return totals, probs


@dataclass(frozen=True)
class ExactProfile:
    availability: float
    throughput: float
    mean: float
    overmean: Optional[float]
    kappa: float
    n: int

    @property
    def unavailability(self) -> float:
        return 1.0 - self.availability

    @property
    def lower_mass(self) -> float:
        """E[D 1(D < kappa)]."""
        if self.overmean is None:
            return self.mean
        return self.mean - self.overmean * (1.0 - self.availability)


def exact_profile(spec: DemandSpec, kappa: float) -> ExactProfile:
    totals, probs = enumerate_outcomes(spec)
    over = totals >= kappa
    p_over = float(probs[over].sum())
    availability = float(probs[~over].sum())
    throughput = float((np.minimum(totals, kappa) * probs).sum() / kappa)
    mean = float((totals * probs).sum())
    overmean = float((totals[over] * probs[over]).sum() / p_over) if p_over > 0 else None
    excess = float((np.maximum(totals - kappa, 0.0) * probs).sum())
    if abs(throughput * kappa - (mean - excess)) > 1e-12 * max(1.0, mean):
        raise ArithmeticError("E[min(D, kappa)] != mean - E[(D - kappa)+] on enumeration")
    return ExactProfile(min(1.0, availability), min(1.0, throughput), mean, overmean,
                        float(kappa), spec.n)


def exact_convex_expectation(spec: DemandSpec, f: ConvexSpec) -> float:
    totals, probs = enumerate_outcomes(spec)
    return float((np.asarray(f(totals), dtype=float) * probs).sum())


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EmpiricalEstimate:
    availability_hat: float
    throughput_hat: float
    availability_se: float
    throughput_se: float
    samples: int
    seed: int


def monte_carlo_profile(spec: DemandSpec, kappa: float, samples: int, seed: int) -> EmpiricalEstimate:
    if samples < 1:
        raise ValueError("samples must be positive")
    n_blocks = -(-samples // MC_BLOCK)
    children = np.random.SeedSequence(seed).spawn(n_blocks)
    s_a = s_t = ss_t = 0.0
    for k, child in enumerate(children):
        size = min(MC_BLOCK, samples - k * MC_BLOCK)
        rng = np.random.Generator(np.random.PCG64(child))
        total = np.zeros(size)
        for agent in spec.agents:
            total += agent.sample(rng, size)
        t = np.minimum(total / kappa, 1.0)
        s_a += float(np.count_nonzero(total < kappa))
        s_t += float(t.sum())
        ss_t += float((t * t).sum())
    a_hat = s_a / samples
    t_hat = s_t / samples
    if samples > 1:
        var_a = max(0.0, (s_a - samples * a_hat * a_hat) / (samples - 1))
        var_t = max(0.0, (ss_t - samples * t_hat * t_hat) / (samples - 1))
        se_a, se_t = math.sqrt(var_a / samples), math.sqrt(var_t / samples)
    else:
        se_a = se_t = 0.0
    return EmpiricalEstimate(a_hat, t_hat, se_a, se_t, samples, seed)


# ---------------------------------------------------------------------------
# verification reports
# ---------------------------------------------------------------------------

def _identical_bernoulli(spec: DemandSpec) -> bool:
    return spec.n > 0 and all(isinstance(a, Bernoulli) for a in spec.agents) and \
        len({a.p for a in spec.agents}) == 1


@dataclass
class ChainReport:
    spec: dict
    demand_value: float
    binomial_value: float
    poisson_value: float
    first_slack: float
    second_slack: float
    iid_bernoulli: bool
    holds: bool
    first_tight: bool
    mode: str = "exact"

    @property
    def verdict(self) -> str:
        ok = self.holds and (self.first_tight or not self.iid_bernoulli)
        return "pass" if ok else "fail"

    def to_dict(self):
        return {**asdict(self), "verdict": self.verdict}


def verify_inequality_chain(spec: DemandSpec, f: ConvexSpec, slack: float = SLACK) -> ChainReport:
    """E[f(D)] <= E[f(Binomial(n, mu/n))] <= E[f(Poisson(mu))] for one spec."""
    lhs = exact_convex_expectation(spec, f)
    mu = spec.mean
    if spec.n == 0:
        binom = float(f(0.0))
    else:
        binom = f.expectation(BinomialParams(spec.n, min(1.0, mu / spec.n)))
    pois = f.expectation(PoissonParams(mu))
    first, second = binom - lhs, pois - binom
    holds = first >= -slack and second >= -slack
    return ChainReport(spec.to_dict(), lhs, binom, pois, first, second,
                       _identical_bernoulli(spec), holds, abs(first) <= slack)


@dataclass
class SoundnessReport:
    spec: dict
    kappa: float
    family: str
    mode: str
    availability: float
    throughput: float
    bound: Optional[float]
    slack: Optional[float]
    verdict: str
    detail: str = ""

    def to_dict(self):
        return asdict(self)


def _family_label(family) -> str:
    if isinstance(family, FixedConvex):
        return f"fixed-convex:{family.f!r}"
    if isinstance(family, OptimalRelu):
        return "optimal-relu"
    return family.name


def _ceiling_or_none(ctx, tau, family):
    try:
        return unavailability_ceiling(ctx, tau, family).value
    except InvalidConvexSpec:
        return None


def verify_bound_soundness(spec: DemandSpec, kappa: float, family, budget: int = 1_000_000,
                           seed: int = 0, n_mode: str = "poisson",
                           slack: float = SLACK) -> SoundnessReport:
    """Check one family's bound against the true (or estimated) demand profile.

    ``n_mode="finite"`` uses the binomial form with the profile's own agent count.
    """
    ctx = SupplyContext(kappa, spec.n if n_mode == "finite" and spec.n > 0 else None)
    label = _family_label(family)
    echo = spec.to_dict()

    if spec.enumerable:
        prof = exact_profile(spec, kappa)
        alpha, tau = prof.availability, prof.throughput
        if isinstance(family, ExpMinusOneClosedForm):
            delta = 1.0 - alpha
            if delta >= 1.0:
                return SoundnessReport(echo, kappa, label, "exact", alpha, tau, None, None,
                                       "not-applicable", "unavailability equals 1")
            # the floor vanishes as delta -> 0
            floor = exp_minus_one_floor(kappa, delta) if delta > 0.0 else 0.0
            gap = tau - floor
            return SoundnessReport(echo, kappa, label, "exact", alpha, tau, floor, gap,
                                   "pass" if gap >= -slack else "fail", "throughput floor")
        ceiling = _ceiling_or_none(ctx, tau, family)
        if ceiling is None:
            return SoundnessReport(echo, kappa, label, "exact", alpha, tau, None, None,
                                   "not-applicable", "f not increasing at kappa")
        gap = ceiling - (1.0 - alpha)
        return SoundnessReport(echo, kappa, label, "exact", alpha, tau, ceiling, gap,
                               "pass" if gap >= -slack else "fail", "unavailability ceiling")

    est = monte_carlo_profile(spec, kappa, budget, seed)
    a_hat, t_hat = est.availability_hat, est.throughput_hat
    unavail_hat = 1.0 - a_hat
    # conservative side for each estimate; ceilings/floors are monotone in their argument
    tau_hi = min(1.0, t_hat + 3.0 * est.throughput_se)
    unavail_lo = max(0.0, unavail_hat - 3.0 * est.availability_se)
    if isinstance(family, ExpMinusOneClosedForm):
        if unavail_hat >= 1.0:
            return SoundnessReport(echo, kappa, label, "mc", a_hat, t_hat, None, None,
                                   "not-applicable", "unavailability equals 1")
        point_floor = exp_minus_one_floor(kappa, unavail_hat) if unavail_hat > 0 else 0.0
        point_gap = t_hat - point_floor
        cons_floor = exp_minus_one_floor(kappa, unavail_lo) if unavail_lo > 0 else 0.0
        cons_gap = tau_hi - cons_floor
        bound = cons_floor
    else:
        point = _ceiling_or_none(ctx, t_hat, family)
        if point is None:
            return SoundnessReport(echo, kappa, label, "mc", a_hat, t_hat, None, None,
                                   "not-applicable", "f not increasing at kappa")
        point_gap = point - unavail_hat
        bound = _ceiling_or_none(ctx, tau_hi, family)
        cons_gap = bound - unavail_lo
    if point_gap >= -slack:
        verdict = "pass"
    elif cons_gap >= -slack:
        verdict = "inconclusive"
    else:
        verdict = "fail"
    return SoundnessReport(echo, kappa, label, "mc", a_hat, t_hat, bound, cons_gap, verdict,
                           f"3-sigma rule, samples={budget}, seed={seed}")


# ---------------------------------------------------------------------------
# random specs and the Poisson-worst-case probe
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RandomSpecConfig:
    """Random demand profiles: n uniform on 1..max_agents, one family per agent."""

    max_agents: int = 12
    families: tuple = ("bernoulli", "point-mass", "mixture")
    mixture_atoms: int = 3


def random_agent(rng: np.random.Generator, family: str):
    if family == "bernoulli":
        return Bernoulli(float(rng.random()))
    if family == "point-mass":
        return PointMass(float(rng.random()))
    if family == "mixture":
        raise ValueError("use random_mixture for mixtures")
    if family == "uniform":
        a, b = sorted(rng.random(2))
        return Uniform(float(a), float(b))
    raise ValueError(f"unknown family {family!r}")


def random_mixture(rng: np.random.Generator, atoms: int = 3) -> FiniteMixture:
    w = rng.dirichlet(np.ones(atoms))
    w = w / w.sum()
    return FiniteMixture(tuple(float(x) for x in w), tuple(float(x) for x in rng.random(atoms)))


def random_demand_spec(rng: np.random.Generator,
                       config: RandomSpecConfig = RandomSpecConfig()) -> DemandSpec:
    n = int(rng.integers(1, config.max_agents + 1))
    agents = []
    for _ in range(n):
        fam = config.families[int(rng.integers(len(config.families)))]
        if fam == "mixture":
            agents.append(random_mixture(rng, config.mixture_atoms))
        else:
            agents.append(random_agent(rng, fam))
    return DemandSpec(tuple(agents))


def random_convex_pwl(rng: np.random.Generator, max_breakpoints: int = 5,
                      span: float = 12.0) -> PiecewiseLinear:
    """Random convex, non-decreasing piecewise-linear f with a positive initial slope."""
    k = int(rng.integers(0, max_breakpoints + 1))
    bps = np.sort(rng.uniform(0.0, span, k))
    bps = tuple(float(b) for b in np.unique(bps))
    s0 = float(rng.uniform(0.05, 1.0))
    slopes = np.concatenate([[s0], s0 + np.cumsum(rng.exponential(1.0, len(bps)))])
    return PiecewiseLinear(bps, tuple(float(s) for s in slopes), float(rng.uniform(0.0, 1.0)))


@dataclass
class ProbeReport:
    kappa: float
    trials: int
    seed: int
    config: dict
    checked: int
    candidates: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def conjecture_probe(config: RandomSpecConfig, kappa: float, trials: int, seed: int,
                     tolerance: float = SLACK) -> ProbeReport:
    """Search random profiles for a pair strictly below the Poisson frontier.

    A candidate means: the Poisson demand with the same availability has more
    throughput than the profile by more than ``tolerance``.  Nothing is asserted.
    """
    rng = np.random.default_rng(seed)
    report = ProbeReport(float(kappa), trials, seed, asdict(config), 0)
    for trial in range(trials):
        spec = random_demand_spec(rng, config)
        if not spec.enumerable:
            continue
        prof = exact_profile(spec, kappa)
        if prof.availability <= 0.0:
            continue
        report.checked += 1
        tau_star = poisson_tau_of_alpha(kappa, prof.availability)
        excess = tau_star - prof.throughput
        if excess > tolerance:
            report.candidates.append({"trial": trial, "spec": spec.to_dict(),
                                      "availability": prof.availability,
                                      "throughput": prof.throughput,
                                      "poisson_throughput": tau_star, "excess": excess})
    return report


# ---------------------------------------------------------------------------
# suites driven by the CLI and the acceptance tests
# ---------------------------------------------------------------------------

def random_kappa(rng: np.random.Generator, spec: DemandSpec) -> float:
    """Supply near the profile's mean so both availability and throughput are informative."""
    return float(max(0.25, rng.uniform(0.3, 1.3) * max(spec.mean, 0.5)))


def run_chain_suite(seed: int, cases: int = 100, iid_cases: int = 20):
    rng = np.random.default_rng(seed)
    config = RandomSpecConfig(max_agents=12, families=("bernoulli", "point-mass"))
    reports = []
    for _ in range(cases):
        spec = random_demand_spec(rng, config)
        reports.append(verify_inequality_chain(spec, random_convex_pwl(rng)))
    for _ in range(iid_cases):
        n = int(rng.integers(1, 13))
        p = float(rng.random())
        spec = DemandSpec(tuple(Bernoulli(p) for _ in range(n)))
        reports.append(verify_inequality_chain(spec, random_convex_pwl(rng)))
    return reports


def soundness_families(rng: np.random.Generator):
    return [OptimalRelu(), ChernoffStyle(), ExpMinusOneClosedForm(),
            FixedConvex(random_convex_pwl(rng)), FixedConvex(Relu(0.0)),
            FixedConvex(ExpMinusOne(float(rng.uniform(0.05, 2.0))))]


def run_soundness_suite(seed: int, cases: int = 200, mc_cases: int = 20,
                        mc_samples: int = 1_000_000):
    rng = np.random.default_rng(seed)
    reports = []
    for _ in range(cases):
        spec = random_demand_spec(rng)
        kappa = random_kappa(rng, spec)
        for family in soundness_families(rng):
            reports.append(verify_bound_soundness(spec, kappa, family))
        reports.append(verify_bound_soundness(spec, kappa, OptimalRelu(), n_mode="finite"))
    mc_config = RandomSpecConfig(families=("uniform", "bernoulli", "point-mass", "mixture"))
    for i in range(mc_cases):
        spec = random_demand_spec(rng, mc_config)
        if not any(isinstance(a, Uniform) for a in spec.agents):
            a, b = sorted(rng.random(2))
            spec = DemandSpec(spec.agents + (Uniform(float(a), float(b)),))
        kappa = random_kappa(rng, spec)
        mc_seed = int(rng.integers(2 ** 63))
        for family in (OptimalRelu(), ChernoffStyle(), ExpMinusOneClosedForm()):
            reports.append(verify_bound_soundness(spec, kappa, family, budget=mc_samples,
                                                  seed=mc_seed))
    return reports
