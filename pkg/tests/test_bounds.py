import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from soupline.benchmark import poisson_tau_of_alpha
from soupline.bounds import (
    ChernoffStyle,
    Exp,
    ExpMinusOne,
    ExpMinusOneClosedForm,
    FixedConvex,
    OptimalRelu,
    PiecewiseLinear,
    Relu,
    SupplyContext,
    TradeoffPoint,
    chernoff_style_ceiling,
    chernoff_style_floor,
    exp_minus_one_floor,
    exp_minus_one_floor_at,
    exp_minus_one_floor_optimized,
    exp_minus_one_lambda,
    family_from_name,
    generator_bound,
    invert_ceiling_to_floor,
    optimal_relu_bound,
    premarkov_bound,
    throughput_floor,
    unavailability_ceiling,
)
from soupline.errors import DomainError, InfeasibleMean, InvalidConvexSpec, NotInvertible

E1 = math.exp(-1.0)
POISSON = None


def ctx(kappa, n=POISSON):
    return SupplyContext(kappa, n)


def random_pwl(rng):
    k = int(rng.integers(0, 6))
    bps = tuple(sorted(set(float(b) for b in rng.uniform(0, 60, k))))
    s0 = float(rng.uniform(0.01, 1.0))
    slopes = (s0,) + tuple(s0 + np.cumsum(rng.exponential(1.0, len(bps))))
    return PiecewiseLinear(bps, slopes, float(rng.uniform(0, 2)))


class TestTypes:
    def test_context_validation(self):
        with pytest.raises(DomainError):
            SupplyContext(0.0)
        with pytest.raises(DomainError):
            SupplyContext(3.0, 0)
        assert SupplyContext(5.0, 2).max_throughput == pytest.approx(0.4)

    def test_infeasible_mean(self):
        with pytest.raises(InfeasibleMean):
            SupplyContext(5.0, 2).demand_distribution(3.0)

    def test_tradeoff_point_range(self):
        with pytest.raises(DomainError):
            TradeoffPoint(1.2, 0.5)

    def test_pwl_validation(self):
        with pytest.raises(InvalidConvexSpec):
            PiecewiseLinear((1.0,), (2.0, 1.0))
        with pytest.raises(InvalidConvexSpec):
            PiecewiseLinear((2.0, 1.0), (1.0, 2.0, 3.0))
        with pytest.raises(InvalidConvexSpec):
            PiecewiseLinear((1.0,), (1.0,))

    def test_pwl_values(self):
        f = PiecewiseLinear((1.0, 3.0), (1.0, 2.0, 5.0), 0.5)
        np.testing.assert_allclose(f([0.0, 1.0, 2.0, 3.0, 4.0]), [0.5, 1.5, 3.5, 5.5, 10.5])
        assert f.right_derivative(1.0) == 2.0
        assert f.right_derivative(0.5) == 1.0

    def test_family_names(self):
        assert isinstance(family_from_name("optimal-relu"), OptimalRelu)
        with pytest.raises(DomainError):
            family_from_name("nope")


class TestGeneratorBound:
    def test_examples(self):
        assert generator_bound(ctx(2.0), 0.0, Relu(1.0)).value == 0.0
        assert generator_bound(ctx(2.0), 0.5, Relu(1.0)).value == pytest.approx(E1, rel=1e-13)
        assert generator_bound(ctx(2.0), 0.5, Relu(0.0)).value == pytest.approx(0.5)

    def test_rejects_flat_at_kappa(self):
        with pytest.raises(InvalidConvexSpec):
            generator_bound(ctx(2.0), 0.5, Relu(3.0))

    def test_exp_generators(self):
        lam = 0.3
        got = generator_bound(ctx(10.0), 0.4, Exp(lam)).value
        assert got == pytest.approx(math.exp(4.0 * math.expm1(lam) - 10 * lam), rel=1e-12)
        got = generator_bound(ctx(10.0), 0.4, ExpMinusOne(lam)).value
        ref = math.expm1(4.0 * math.expm1(lam)) / math.expm1(10 * lam)
        assert got == pytest.approx(ref, rel=1e-12)

    def test_finite_n_is_tighter_and_monotone(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            f = random_pwl(rng)
            kappa = float(rng.uniform(2, 30))
            tau = float(rng.uniform(0.05, 0.95))
            try:
                pois = generator_bound(ctx(kappa), tau, f).value
            except InvalidConvexSpec:
                continue
            n0 = int(math.ceil(kappa * tau))
            vals = [generator_bound(ctx(kappa, n), tau, f).value for n in range(max(n0, 1), n0 + 40)]
            assert all(v <= pois + 1e-12 for v in vals)
            assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


class TestOptimalRelu:
    def test_examples(self):
        c = optimal_relu_bound(ctx(2.0), 0.5)
        assert c.value == pytest.approx(E1, rel=1e-12)
        assert c.witness == 1.0
        assert optimal_relu_bound(ctx(5.0), 0.0).value == 0.0
        # 0.34% unavailability once rounded to four decimals
        assert optimal_relu_bound(ctx(40.0), 0.6).value == pytest.approx(0.0034, abs=5e-5)

    def test_integer_knees_are_enough(self):
        # a fine scan over real knees never beats the integer search
        c = ctx(7.5)
        for tau in [0.2, 0.5, 0.8]:
            best = optimal_relu_bound(c, tau).value
            scan = min(generator_bound(c, tau, Relu(k)).value for k in np.linspace(0, 7.49, 750))
            assert best <= scan + 1e-12

    @settings(max_examples=80, deadline=None)
    @given(kappa=st.floats(0.5, 120.0), tau=st.floats(0.0, 1.0))
    def test_markov(self, kappa, tau):
        assert optimal_relu_bound(ctx(kappa), tau).value <= tau + 1e-12

    def test_relu_dominates_random_pwl(self):
        rng = np.random.default_rng(11)
        checked = 0
        for _ in range(100):
            f = random_pwl(rng)
            kappa = float(rng.choice([2.0, 5.0, 13.5, 40.0]))
            tau = float(rng.uniform(0.0, 1.0))
            for n in (None, int(math.ceil(kappa)) + 3):
                try:
                    g = generator_bound(ctx(kappa, n), tau, f).value
                except InvalidConvexSpec:
                    continue
                checked += 1
                assert optimal_relu_bound(ctx(kappa, n), tau).value <= g + 1e-12
        assert checked > 100

    def test_monotone_in_tau(self):
        vals = [optimal_relu_bound(ctx(10.0), t).value for t in np.linspace(0, 1, 101)]
        assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))


class TestPremarkov:
    def test_examples(self):
        assert premarkov_bound(ctx(1.0, 2), 1.0, 1.0, Relu(0.0)).value == pytest.approx(1.0)
        i = np.arange(5)
        ref = float((stats.binom.pmf(i, 4, 0.25) * np.maximum(i - 1.0, 0.0)).sum())
        assert premarkov_bound(ctx(2.0, 4), 1.0, 2.0, Relu(1.0)).value == pytest.approx(ref)
        assert ref == pytest.approx(81 / 256)
        assert premarkov_bound(ctx(2.0, 2), 0.0, 2.0, Relu(1.0)).value == 0.0

    def test_overmean_domain(self):
        with pytest.raises(DomainError):
            premarkov_bound(ctx(3.0), 1.0, 2.0, Relu(0.0))


class TestChernoffStyle:
    def test_ceiling_examples(self):
        assert chernoff_style_ceiling(100.0, 0.5).value == pytest.approx(math.exp(-18.75), rel=1e-12)
        assert chernoff_style_ceiling(100.0, 1.0 - 1e-12).value == pytest.approx(1.0, abs=1e-9)
        with pytest.raises(DomainError):
            chernoff_style_ceiling(0.0, 0.5)

    def test_floor_examples(self):
        assert chernoff_style_floor(7.0, 0.0) == 1.0
        assert chernoff_style_floor(100.0, 0.5) == pytest.approx(0.88678933, abs=1e-8)
        assert chernoff_style_floor(5.0, 0.9999) < 0

    def test_floor_inverts_ceiling(self):
        for kappa in (5.0, 40.0):
            for alpha in (0.1, 0.6, 0.95):
                t = chernoff_style_floor(kappa, alpha)
                assert chernoff_style_ceiling(kappa, t).value == pytest.approx(1 - alpha, rel=1e-9)

    def test_limit_at_full_availability(self):
        assert throughput_floor(ctx(5.0), 1.0, ChernoffStyle()) == -0.5
        vals = [chernoff_style_floor(5.0, 1 - 10.0 ** -k) for k in range(3, 16)]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert all(v > -0.5 for v in vals)


class TestExpMinusOne:
    def test_example_value(self):
        assert exp_minus_one_floor(1.0, E1) == pytest.approx(0.208404905, abs=1e-8)

    def test_closed_form_matches_general_lambda(self):
        for kappa, delta in [(1.0, E1), (40.0, 0.0034), (5.0, 0.2)]:
            lam = exp_minus_one_lambda(kappa, delta)
            assert exp_minus_one_floor(kappa, delta) == pytest.approx(
                exp_minus_one_floor_at(kappa, delta, lam), rel=1e-12)

    def test_closed_form_below_lambda_grid_best(self):
        grid = np.linspace(1e-4, 5.0, 5000)
        for kappa, delta in [(1.0, E1), (40.0, 0.0034), (100.0, 0.5)]:
            best = max(exp_minus_one_floor_at(kappa, delta, lam) for lam in grid)
            assert exp_minus_one_floor(kappa, delta) <= best + 1e-12
            opt, _ = exp_minus_one_floor_optimized(kappa, delta)
            assert opt >= exp_minus_one_floor(kappa, delta)
            assert opt >= best - 1e-6

    def test_vanishes_as_delta_shrinks(self):
        vals = [exp_minus_one_floor(40.0, d) for d in (1e-3, 1e-6, 1e-9, 1e-12)]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert exp_minus_one_floor(40.0, 1e-300) < 1e-6

    def test_below_benchmark(self):
        assert exp_minus_one_floor(40.0, 0.0034) <= poisson_tau_of_alpha(40.0, 0.9966)

    def test_domain(self):
        with pytest.raises(DomainError):
            exp_minus_one_floor(1.0, 0.0)
        with pytest.raises(DomainError):
            exp_minus_one_floor(0.0, 0.5)

    def test_ceiling_is_valid_generator(self):
        c = unavailability_ceiling(ctx(40.0), 0.6, ExpMinusOneClosedForm())
        direct = generator_bound(ctx(40.0), 0.6, ExpMinusOne(c.witness)).value
        assert c.value == pytest.approx(direct, rel=1e-9)
        assert c.value >= optimal_relu_bound(ctx(40.0), 0.6).value


class TestInversion:
    def test_examples(self):
        assert invert_ceiling_to_floor(ctx(3.0), 0.0, OptimalRelu()) == pytest.approx(1.0, abs=1e-9)
        t = invert_ceiling_to_floor(ctx(2.0), 1 - E1, OptimalRelu())
        assert abs(t - 0.5) < 1e-9 and t <= 0.5
        assert invert_ceiling_to_floor(ctx(40.0), 0.9966, OptimalRelu()) <= 0.60

    def test_closed_forms_are_not_inverted(self):
        with pytest.raises(NotInvertible):
            invert_ceiling_to_floor(ctx(3.0), 0.5, ChernoffStyle())

    def test_fixed_convex_roundtrip(self):
        fam = FixedConvex(PiecewiseLinear((2.0,), (0.5, 2.0)))
        t = invert_ceiling_to_floor(ctx(6.0), 0.8, fam)
        assert unavailability_ceiling(ctx(6.0), t, fam).value <= 0.2 + 1e-9

    @pytest.mark.parametrize("kappa", [5.0, 40.0, 100.0])
    def test_floor_ordering(self, kappa):
        c = ctx(kappa)
        for alpha in np.linspace(0.01, 0.99, 25):
            relu = throughput_floor(c, alpha, OptimalRelu())
            assert chernoff_style_floor(kappa, alpha) <= relu + 1e-9
            assert exp_minus_one_floor(kappa, 1 - alpha) <= relu + 1e-9
            assert relu <= poisson_tau_of_alpha(kappa, alpha) + 1e-9

    def test_floor_improves_with_supply(self):
        for alpha in (0.5, 0.9, 0.99):
            vals = [throughput_floor(ctx(k), alpha, OptimalRelu()) for k in (2, 5, 10, 40, 100)]
            assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))

    def test_finite_n_floor(self):
        # knowing n tightens the ceiling and therefore raises the floor
        a = throughput_floor(ctx(10.0, 12), 0.9, OptimalRelu())
        b = throughput_floor(ctx(10.0), 0.9, OptimalRelu())
        assert a >= b - 1e-9
