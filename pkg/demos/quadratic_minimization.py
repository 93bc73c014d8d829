"""Quasi-Newton minimization of a strongly convex quadratic.

The step is x <- x - H grad with the maintained inverse H, while the
approximation is updated along greedy or random directions.  The
inverse-weighted gradient norm lambda_k collapses superlinearly, and the
rank-one scheme lands exactly after d + 1 steps.
"""

import numpy as np

from qnlab import DirectionStrategy, QuadraticObjective, StopRule, UpdateRule, \
    random_spd, solve_quadratic
from qnlab.rng import gaussians, rng_from_seed

d, kappa = 25, 500.0
a = random_spd(d, kappa, 11)
b, _ = gaussians(d, rng_from_seed(12))
obj = QuadraticObjective(a, b)
g0 = obj.lip_L * np.eye(d)
x0 = np.zeros(d)
stop = StopRule(max_iters=2 * d, lambda_tol=1e-14)

print(f"quadratic: d = {d}, condition number {obj.kappa:.0f}, start G0 = L I\n")

traces = {}
for name, rule, strategy in [
    ("greedy SR1", UpdateRule.sr1(), DirectionStrategy("greedy_sr1")),
    ("random SR1", UpdateRule.sr1(), DirectionStrategy("random_sphere", 3)),
    ("random BFGS", UpdateRule.bfgs(), DirectionStrategy("random_sphere", 3)),
    ("greedy DFP", UpdateRule.dfp(), DirectionStrategy("greedy_broyden")),
]:
    x, records = solve_quadratic(obj, x0, g0, rule, strategy, stop)
    traces[name] = records
    print(f"{name:>12}: {len(records) - 1:>3} steps, final lambda/lambda0 = "
          f"{records[-1].lambda_k / records[0].lambda_k:.2e}, "
          f"|x - x*| = {np.linalg.norm(x - obj.x_star):.2e}")

print("\nlambda_k (inverse-weighted gradient norm) every 5 steps:")
names = list(traces)
print(f"{'k':>3} " + " ".join(f"{n:>13}" for n in names))
for k in range(0, 2 * d + 1, 5):
    cells = []
    for name in names:
        records = traces[name]
        cells.append(f"{records[k].lambda_k:>13.4e}" if k < len(records) else " " * 13)
    print(f"{k:>3} " + " ".join(cells))

print("\nthe SR1 runs hit machine zero right after step d + 1 =", d + 1)
