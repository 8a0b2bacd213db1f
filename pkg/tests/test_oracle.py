import itertools
import json

import numpy as np
import pytest
from scipy import stats

from soupline.bounds import (
    ChernoffStyle,
    ExpMinusOneClosedForm,
    OptimalRelu,
    PiecewiseLinear,
    Relu,
    SupplyContext,
    premarkov_bound,
)
from soupline.errors import TooLarge, UnsupportedDistribution
from soupline.oracle import (
    Bernoulli,
    DemandSpec,
    FiniteMixture,
    PointMass,
    RandomSpecConfig,
    Uniform,
    conjecture_probe,
    exact_convex_expectation,
    exact_profile,
    monte_carlo_profile,
    random_convex_pwl,
    random_demand_spec,
    random_kappa,
    verify_bound_soundness,
    verify_inequality_chain,
)

TWO_COINS = DemandSpec([Bernoulli(0.5), Bernoulli(0.5)])


def brute_force(spec, kappa):
    """(alpha, tau, mean) by looping over every joint outcome."""
    per_agent = [list(zip(*a.atoms())) for a in spec.agents]
    alpha = tau = mean = 0.0
    for combo in itertools.product(*per_agent):
        d = sum(v for v, _ in combo)
        p = float(np.prod([w for _, w in combo]))
        alpha += p * (d < kappa)
        tau += p * min(d, kappa) / kappa
        mean += p * d
    return alpha, tau, mean


class TestDistributions:
    def test_validation(self):
        with pytest.raises(ValueError):
            Bernoulli(1.2)
        with pytest.raises(ValueError):
            Uniform(0.6, 0.2)
        with pytest.raises(ValueError):
            FiniteMixture((0.5, 0.4), (0.1, 0.2))
        with pytest.raises(ValueError):
            FiniteMixture((1.0,), (1.5,))

    def test_uniform_not_enumerable(self):
        with pytest.raises(UnsupportedDistribution):
            exact_profile(DemandSpec([Uniform(0.0, 1.0)]), 1.0)
        assert not DemandSpec([Uniform(0.0, 1.0)]).enumerable

    def test_too_many_agents(self):
        with pytest.raises(TooLarge):
            exact_profile(DemandSpec([Bernoulli(0.5)] * 21), 3.0)


class TestExactProfile:
    def test_examples(self):
        p = exact_profile(TWO_COINS, 1.5)
        assert p.availability == pytest.approx(0.75)
        assert p.throughput == pytest.approx(0.5833333333333334)
        p = exact_profile(DemandSpec([PointMass(1.0)]), 2.0)
        assert (p.availability, p.throughput) == (1.0, 0.5)
        p = exact_profile(DemandSpec(), 1.0)
        assert (p.availability, p.throughput, p.overmean) == (1.0, 0.0, None)

    def test_matches_brute_force_and_binomial(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            spec = random_demand_spec(rng, RandomSpecConfig(max_agents=7))
            kappa = random_kappa(rng, spec)
            a, t, m = brute_force(spec, kappa)
            p = exact_profile(spec, kappa)
            assert p.availability == pytest.approx(a, abs=1e-12)
            assert p.throughput == pytest.approx(t, abs=1e-12)
            assert p.mean == pytest.approx(m, abs=1e-12)
            if p.overmean is not None:
                assert kappa - 1e-12 <= p.overmean <= spec.n + 1e-12
        p = exact_profile(DemandSpec([Bernoulli(0.3)] * 9), 4.0)
        assert p.availability == pytest.approx(stats.binom.cdf(3, 9, 0.3), rel=1e-12)

    def test_lower_mass(self):
        p = exact_profile(TWO_COINS, 1.5)
        # only D in {0, 1} is below 1.5
        assert p.lower_mass == pytest.approx(0.5)


class TestConvexExpectation:
    def test_examples(self):
        assert exact_convex_expectation(TWO_COINS, Relu(1.0)) == pytest.approx(0.25)
        assert exact_convex_expectation(DemandSpec([Bernoulli(0.37)]), Relu(0.0)) == pytest.approx(0.37)
        f = PiecewiseLinear((), (1.0,))
        assert exact_convex_expectation(DemandSpec([PointMass(0.5)] * 2), f) == pytest.approx(1.0)


class TestMonteCarlo:
    def test_deterministic_demand(self):
        e = monte_carlo_profile(DemandSpec([PointMass(1.0)] * 3), 2.0, 1000, 9)
        assert (e.availability_hat, e.throughput_hat) == (0.0, 1.0)
        assert e.availability_se == 0.0 and e.throughput_se == 0.0

    def test_reproducible(self):
        spec = DemandSpec([Uniform(0.1, 0.9), Bernoulli(0.4)])
        assert monte_carlo_profile(spec, 1.0, 200_000, 3) == monte_carlo_profile(spec, 1.0, 200_000, 3)

    def test_agrees_with_exact(self):
        e = monte_carlo_profile(TWO_COINS, 1.5, 10 ** 6, 1)
        assert abs(e.availability_hat - 0.75) <= 4 * e.availability_se

    def test_coverage_over_seeds(self):
        spec = DemandSpec([Bernoulli(0.3), FiniteMixture((0.2, 0.8), (0.1, 0.9)), PointMass(0.4)])
        exact = exact_profile(spec, 1.5).availability
        hits = 0
        for seed in range(100):
            e = monte_carlo_profile(spec, 1.5, 4000, seed)
            hits += abs(e.availability_hat - exact) <= 4 * e.availability_se
        assert hits >= 99


class TestChain:
    def test_examples(self):
        r = verify_inequality_chain(DemandSpec([Bernoulli(0.3), Bernoulli(0.7)]), Relu(1.0))
        assert r.holds and not r.first_tight and r.verdict == "pass"
        r = verify_inequality_chain(DemandSpec([Bernoulli(0.5)] * 4), Relu(2.0))
        assert r.holds and r.first_tight and r.iid_bernoulli
        r = verify_inequality_chain(DemandSpec([PointMass(0.5)] * 2), Relu(0.0))
        assert r.holds and r.binomial_value == pytest.approx(r.poisson_value)

    def test_report_is_json(self):
        r = verify_inequality_chain(TWO_COINS, Relu(1.0))
        doc = json.loads(json.dumps(r.to_dict()))
        assert doc["verdict"] == "pass" and doc["spec"]["agents"][0]["kind"] == "bernoulli"


class TestSoundness:
    def test_examples(self):
        r = verify_bound_soundness(TWO_COINS, 1.5, OptimalRelu())
        assert r.verdict == "pass" and r.mode == "exact"
        for fam in (OptimalRelu(), ChernoffStyle(), ExpMinusOneClosedForm()):
            r = verify_bound_soundness(DemandSpec([PointMass(1.0)] * 3), 4.0, fam)
            assert r.verdict == "pass"

    def test_mc_path(self):
        spec = DemandSpec([Uniform(0.2, 1.0)] * 6)
        r = verify_bound_soundness(spec, 3.5, OptimalRelu(), budget=100_000, seed=4)
        assert r.mode == "mc" and r.verdict == "pass"
        assert json.loads(json.dumps(r.to_dict()))["verdict"] == "pass"

    def test_premarkov_holds_on_random_specs(self):
        rng = np.random.default_rng(21)
        checked = 0
        for _ in range(60):
            spec = random_demand_spec(rng)
            kappa = random_kappa(rng, spec)
            p = exact_profile(spec, kappa)
            if p.overmean is None:
                continue
            f = random_convex_pwl(rng)
            bound = premarkov_bound(SupplyContext(kappa), p.mean, p.overmean, f).value
            assert 1 - p.availability <= bound + 1e-9
            checked += 1
        assert checked > 20


class TestProbe:
    def test_bernoulli_specs_have_no_candidates(self):
        rep = conjecture_probe(RandomSpecConfig(families=("bernoulli",)), 5.0, 100, 8)
        assert rep.checked > 0 and rep.candidates == []

    def test_deterministic(self):
        cfg = RandomSpecConfig(families=("point-mass",))
        a = conjecture_probe(cfg, 3.0, 50, 2).to_dict()
        b = conjecture_probe(cfg, 3.0, 50, 2).to_dict()
        assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
