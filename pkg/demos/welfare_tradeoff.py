"""Posted prices: welfare guarantee against the chance of running short.

First the analytic floor as a function of delta for two supplies, compared with
the older 1/(1 + sqrt(8 ln K / K)) guarantee; then a small exact simulation
showing the floor holding for a concrete market.
"""

from soupline.prophet import AgentPrior, ValueFunction, hks_reference, simulate_posted_price, welfare_curve

for K in (10.0, 101.0):
    c = welfare_curve(K)
    print(f"K={K:g}: best floor {c.meta['peak_floor']:.4f} at delta={c.meta['peak_delta']:.4f}"
          f"  (reference {hks_reference(K):.4f})")

# three agents, each either keen (steep first half-unit) or lukewarm
keen = ValueFunction((0.0, 0.5, 1.0), (2.0, 0.4))
meh = ValueFunction.linear(0.5)
agents = [AgentPrior((keen, meh), (0.5, 0.5))] * 3
for price in (0.3, 0.45, 0.6):
    r = simulate_posted_price(agents, K=2.5, p=price)
    print(f"p={price}: APX/OPT={r.ratio:.4f}  floor={r.floor:.4f}  delta={r.delta_hat:.3f}  tau={r.tau:.3f}")
