"""How far below the Poisson frontier do the provable floors sit?

For a few supplies we print, at a handful of availabilities, the throughput
of Poisson demand (the conjectured worst case) next to three provable floors.
The optimal-ReLU floor should always be the highest of the three, and the
Chernoff-style floor goes negative once availability gets close to 1 at
small supply.
"""

from soupline.benchmark import poisson_tau_of_alpha
from soupline.bounds import ChernoffStyle, ExpMinusOneClosedForm, OptimalRelu, SupplyContext, throughput_floor

ALPHAS = [0.5, 0.9, 0.99, 0.999, 0.9999]

for kappa in (5.0, 100.0):
    ctx = SupplyContext(kappa)
    print(f"\nkappa = {kappa:g}")
    print(f"{'alpha':>8} {'poisson':>9} {'relu':>9} {'exp-1':>9} {'chernoff':>9}")
    for a in ALPHAS:
        row = [poisson_tau_of_alpha(kappa, a)]
        row += [throughput_floor(ctx, a, fam) for fam in (OptimalRelu(), ExpMinusOneClosedForm(), ChernoffStyle())]
        print(f"{a:>8g} " + " ".join(f"{v:9.4f}" for v in row))

# Knowing the number of demanders tightens things: the binomial form beats the Poisson limit.
ctx_n = SupplyContext(10.0, n=12)
print("\nkappa=10, alpha=0.9:",
      f"Poisson-limit floor {throughput_floor(SupplyContext(10.0), 0.9, OptimalRelu()):.4f},",
      f"with n=12 {throughput_floor(ctx_n, 0.9, OptimalRelu()):.4f}")
