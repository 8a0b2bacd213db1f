"""Block gas as a capacity problem.

A 30M gas block and transactions of at most 750k gas give an effective supply
of 40 transactions.  If the fee mechanism targets 60% throughput, how often
can a block be full?
"""

from soupline.bounds import SupplyContext, optimal_relu_bound
from soupline.cli import ethereum_summary

s = ethereum_summary(30e6, 750_000, 0.6)
print(f"kappa = {s['kappa']:g}, best ReLU knee = {s['knee']:g}")
print(f"availability floor = {s['availability_floor']:.6f}")
print(f"full block at most once every {s['blocks_per_emergency']:.0f} blocks")

# the whole curve at this supply, coarse
ctx = SupplyContext(40.0)
for tau in (0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9):
    print(f"  target {tau:.1f}: availability >= {1 - optimal_relu_bound(ctx, tau).value:.6f}")

# a smaller worst-case transaction means a larger effective supply
print("max tx 300k gas:", f"{ethereum_summary(30e6, 300_000, 0.6)['availability_floor']:.8f}")
