"""l2-regularized logistic regression with a first-order baseline.

Parses a small LIBSVM-format sample, warm-starts with Newton steps to
enter the local region, runs random-direction quasi-Newton updates (no
inflation: the correction is off for this loss), and compares against
constant-step accelerated gradient descent on iteration counts.
"""

import io

import numpy as np

from qnlab import DirectionStrategy, LogisticObjective, StopRule, UpdateRule, \
    agd_baseline, newton_warm_start, parse_libsvm, samples_to_dense, solve_general
from qnlab.rng import rng_from_seed, uniforms

# a LIBSVM-format payload, generated here so the demo is self-contained
state = rng_from_seed(2024)
d, n = 12, 80
flat, state = uniforms(d * n, state, -1.0, 1.0)
features = flat.reshape(d, n)
w_true, state = uniforms(d, state, -1.0, 1.0)
labels = np.where(features.T @ w_true >= 0.0, 1, -1)
lines = []
for j in range(n):
    feats = " ".join(f"{i + 1}:{features[i, j]:.6f}" for i in range(d))
    lines.append(f"{'+1' if labels[j] > 0 else '-1'} {feats}")
payload = "\n".join(lines)

samples, dim = parse_libsvm(io.StringIO(payload))
x, y = samples_to_dense(samples, dim)
obj = LogisticObjective(x, y, gamma=0.05)
print(f"dataset: {len(samples)} samples, {dim} features, "
      f"condition number {obj.kappa:.0f}")

w0 = newton_warm_start(obj, np.zeros(dim), 3)
print(f"after 3 Newton warm-start steps: |grad| = {np.linalg.norm(obj.grad(w0)):.2e}\n")

stop = StopRule(max_iters=200, grad_tol=1e-10, lambda_tol=None)
for name, rule in [("random SR1", UpdateRule.sr1()), ("random BFGS", UpdateRule.bfgs())]:
    _, records = solve_general(obj, w0, rule, DirectionStrategy("random_sphere", 1),
                               0.0, stop, dense_instrumentation=False)
    print(f"{name:>12}: |grad| = {records[-1].grad_norm:.2e} "
          f"after {len(records) - 1} iterations")

iters = 2000
_, trace = agd_baseline(obj, w0, iters)
print(f"{'AGD':>12}: |grad| = {trace[-1]:.2e} after {iters} iterations")
print("\nsecond-order updates need orders of magnitude fewer iterations than")
print("the accelerated first-order baseline at this conditioning")
