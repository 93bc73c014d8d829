"""Regularized log-sum-exp: the general-objective driver at work.

Builds the synthetic instance whose minimizer sits at the origin, starts
on a small sphere around it, warm-starts with one Newton step, and then
compares update rules under the per-step inflation safeguard
G <- (1 + M r) G with M = 2.  The gradient-norm traces show the familiar
picture: rank-one beats rank-two, greedy beats random.
"""

import numpy as np

from qnlab import DirectionStrategy, StopRule, UpdateRule, initial_point_on_sphere, \
    make_logsumexp_synthetic, newton_warm_start, solve_general

d, m, gamma = 20, 30, 1.0
obj = make_logsumexp_synthetic(d, m, gamma, seed=30)
print(f"synthetic instance: d = {d}, m = {m}, gamma = {gamma:g}, "
      f"condition number {obj.kappa:.0f}")

x0 = initial_point_on_sphere(d, 1.0 / d, seed=7)
x0 = newton_warm_start(obj, x0, 1)
print(f"start after one Newton step: |grad| = {np.linalg.norm(obj.grad(x0)):.2e}\n")

stop = StopRule(max_iters=120, grad_tol=1e-12, lambda_tol=None)
m_const = obj.self_concordant_M

traces = {}
for name, rule, strategy in [
    ("greedy SR1", UpdateRule.sr1(), DirectionStrategy("greedy_sr1")),
    ("random SR1", UpdateRule.sr1(), DirectionStrategy("random_sphere", 5)),
    ("random BFGS", UpdateRule.bfgs(), DirectionStrategy("random_sphere", 5)),
    ("greedy Broyden", UpdateRule.broyden(1.0), DirectionStrategy("greedy_broyden")),
]:
    _, records = solve_general(obj, x0, rule, strategy, m_const, stop,
                               dense_instrumentation=False)
    traces[name] = [r.grad_norm for r in records]
    print(f"{name:>15}: reached |grad| = {traces[name][-1]:.2e} "
          f"in {len(records) - 1} iterations")

print("\n|grad f(x_k)| every 10 iterations:")
names = list(traces)
width = max(len(t) for t in traces.values())
print(f"{'k':>3} " + " ".join(f"{n:>15}" for n in names))
for k in range(0, width, 10):
    cells = []
    for name in names:
        t = traces[name]
        cells.append(f"{t[k]:>15.4e}" if k < len(t) else " " * 15)
    print(f"{k:>3} " + " ".join(cells))

print("\nnote the rank-one tail: once the approximation catches the local "
      "Hessian,\nthe last iterations contract by orders of magnitude each")
