"""Checking the theory against brute force.

Exact enumeration of small demand profiles, a Monte Carlo estimate for a
continuous one, and a random search for profiles that beat Poisson demand.
"""

from soupline.bounds import OptimalRelu, Relu
from soupline.oracle import (Bernoulli, DemandSpec, PointMass, RandomSpecConfig, Uniform,
                             conjecture_probe, exact_profile, monte_carlo_profile,
                             verify_bound_soundness, verify_inequality_chain)

spec = DemandSpec([Bernoulli(0.3), Bernoulli(0.7), PointMass(0.5)])
print(exact_profile(spec, 1.5))

r = verify_inequality_chain(spec, Relu(1.0))
print(f"E f(D)={r.demand_value:.4f} <= binomial {r.binomial_value:.4f} <= Poisson {r.poisson_value:.4f}")

print(verify_bound_soundness(spec, 1.5, OptimalRelu()).verdict)

cont = DemandSpec([Uniform(0.2, 1.0)] * 8)
est = monte_carlo_profile(cont, 4.0, samples=500_000, seed=1)
print(f"uniform demands: alpha ~ {est.availability_hat:.4f} +- {est.availability_se:.4f}")
print(verify_bound_soundness(cont, 4.0, OptimalRelu(), budget=500_000, seed=1).verdict)

probe = conjecture_probe(RandomSpecConfig(), kappa=3.0, trials=300, seed=5)
print(f"probe: {probe.checked} profiles checked, {len(probe.candidates)} below the Poisson frontier")
