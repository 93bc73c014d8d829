"""Closed-form convergence-rate envelopes.

Reference curves the measured traces are compared against:

* matrix approximation, per step k from the initial measure:
    - ``sr1_matrix``:      tau0 * max(0, 1 - k/d)
    - ``bfgs_matrix``:     sigma0 * (1 - 1/d)^k
    - ``broyden_matrix``:  sigma0 * (1 - 1/(d*kappa))^k
* quadratic minimization, bounds on the per-step ratio lambda_{k+1}/lambda_k:
    - ``sr1_quadratic``:     (tau0 / mu) * max(0, 1 - k/d)
    - ``bfgs_quadratic``:    sigma0 * (1 - 1/d)^k
    - ``broyden_quadratic``: sigma0 * (1 - 1/(d*kappa))^k
* high-probability options (hold with probability >= 1 - delta; far looser
  than the expectation bounds and used only as envelope choices):
    - ``broyden_sigma_highprob``: (2 d^2 kappa^2 sigma0 / delta)
                                  * (1 - 1/(d*kappa + 1))^k
    - ``quadratic_lambda_highprob``: lam0 * (2 d^2 kappa^2 sigma0/delta)^k
                                     * (1 - 1/(d*kappa + 1))^{k(k-1)/2}
* two-phase envelopes on lambda after k0 burn-in steps, value at offset k:
    lam0 * rate^{k(k-1)/2} * (1/2)^k * (1 - 1/(2*kappa))^{k0}
  with rate base (1 - 1/d) for ``two_phase_greedy``, (1 - 1/(d+1)) for
  ``two_phase_random``, and (1 - 1/(d*kappa + 1)) for
  ``two_phase_random_broyden``.

``starting_moment`` evaluates the closed-form step counts after which the
superlinear phase of each scheme is in force.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MATRIX_KINDS = ("sr1_matrix", "bfgs_matrix", "broyden_matrix")
QUADRATIC_KINDS = ("sr1_quadratic", "bfgs_quadratic", "broyden_quadratic")
HIGHPROB_KINDS = ("broyden_sigma_highprob", "quadratic_lambda_highprob")
TWO_PHASE_KINDS = ("two_phase_greedy", "two_phase_random", "two_phase_random_broyden")

ENVELOPE_KINDS = MATRIX_KINDS + QUADRATIC_KINDS + HIGHPROB_KINDS + TWO_PHASE_KINDS


@dataclass(frozen=True)
class BoundEnvelope:
    """Per-step values of one theoretical bound."""

    kind: str
    params: dict = field(compare=False)
    values: np.ndarray = field(compare=False)

    def __len__(self):
        return len(self.values)


def _need(params, *names):
    missing = [n for n in names if n not in params]
    if missing:
        raise ValueError(f"envelope needs parameters {missing}")
    return [float(params[n]) for n in names]


def bound_envelope(kind: str, steps: int, **params) -> BoundEnvelope:
    """Evaluate the chosen bound at k = 0 .. steps inclusive."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    k = np.arange(steps + 1, dtype=np.float64)
    if kind == "sr1_matrix":
        (d, tau0) = _need(params, "d", "tau0")
        values = tau0 * np.maximum(0.0, 1.0 - k / d)
    elif kind == "bfgs_matrix":
        (d, sigma0) = _need(params, "d", "sigma0")
        values = sigma0 * (1.0 - 1.0 / d) ** k
    elif kind == "broyden_matrix":
        (d, kappa, sigma0) = _need(params, "d", "kappa", "sigma0")
        values = sigma0 * (1.0 - 1.0 / (d * kappa)) ** k
    elif kind == "sr1_quadratic":
        (d, tau0, mu) = _need(params, "d", "tau0", "mu")
        values = (tau0 / mu) * np.maximum(0.0, 1.0 - k / d)
    elif kind == "bfgs_quadratic":
        (d, sigma0) = _need(params, "d", "sigma0")
        values = sigma0 * (1.0 - 1.0 / d) ** k
    elif kind == "broyden_quadratic":
        (d, kappa, sigma0) = _need(params, "d", "kappa", "sigma0")
        values = sigma0 * (1.0 - 1.0 / (d * kappa)) ** k
    elif kind == "broyden_sigma_highprob":
        (d, kappa, sigma0, delta) = _need(params, "d", "kappa", "sigma0", "delta")
        lead = 2.0 * d * d * kappa * kappa * sigma0 / delta
        values = lead * (1.0 - 1.0 / (d * kappa + 1.0)) ** k
    elif kind == "quadratic_lambda_highprob":
        (d, kappa, sigma0, delta, lam0) = _need(params, "d", "kappa", "sigma0", "delta", "lam0")
        lead = 2.0 * d * d * kappa * kappa * sigma0 / delta
        values = lam0 * lead ** k * (1.0 - 1.0 / (d * kappa + 1.0)) ** (k * (k - 1.0) / 2.0)
    elif kind in TWO_PHASE_KINDS:
        (d, kappa, k0, lam0) = _need(params, "d", "kappa", "k0", "lam0")
        if kind == "two_phase_greedy":
            base = 1.0 - 1.0 / d
        elif kind == "two_phase_random":
            base = 1.0 - 1.0 / (d + 1.0)
        else:
            base = 1.0 - 1.0 / (d * kappa + 1.0)
        burn = (1.0 - 1.0 / (2.0 * kappa)) ** k0
        values = lam0 * base ** (k * (k - 1.0) / 2.0) * 0.5 ** k * burn
    else:
        raise ValueError(f"unknown envelope kind {kind!r}")
    return BoundEnvelope(kind=kind, params=dict(params), values=values)


def starting_moment(kind: str, d: int, kappa: float, delta: float | None = None) -> float:
    """Step count after which the superlinear rate of a scheme is in force.

    Greedy schemes: 2 d ln(2 d kappa) + 1 for BFGS and
    2 d ln(2 d kappa^2) + 1 for SR1.  Random schemes hold with probability
    1 - delta: 2 (d kappa + 1) ln(4 d^3 kappa^3 / delta) + 1 for the
    Broyden family and 2 (d + 1) ln(4 d^3 kappa / delta) + 1 (BFGS) or
    2 (d + 1) ln(4 d^3 kappa^2 / delta) + 1 (SR1).
    """
    if kind == "greedy_bfgs":
        return 2.0 * d * math.log(2.0 * d * kappa) + 1.0
    if kind == "greedy_sr1":
        return 2.0 * d * math.log(2.0 * d * kappa ** 2) + 1.0
    if delta is None or not 0.0 < delta < 1.0:
        raise ValueError(f"kind {kind!r} needs delta in (0, 1)")
    if kind == "random_broyden":
        return 2.0 * (d * kappa + 1.0) * math.log(4.0 * d ** 3 * kappa ** 3 / delta) + 1.0
    if kind == "random_bfgs":
        return 2.0 * (d + 1.0) * math.log(4.0 * d ** 3 * kappa / delta) + 1.0
    if kind == "random_sr1":
        return 2.0 * (d + 1.0) * math.log(4.0 * d ** 3 * kappa ** 2 / delta) + 1.0
    raise ValueError(f"unknown starting-moment kind {kind!r}")
