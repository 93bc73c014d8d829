"""Convergence measures for Hessian approximations.

Three scalar measures quantify how far an approximation ``G`` sits above a
target SPD matrix ``A``, plus the trace ratio used by the rank-one update
analysis:

* ``sigma_measure``: trace((G - A) A^{-1}), the inverse-weighted trace gap.
* ``tau_measure``: trace(G - A), the plain trace gap.
* ``lambda_measure``: sqrt(g' A^{-1} g), the inverse-weighted gradient norm.
* ``eta_trace_ratio``: trace(G - A) / trace(A).

Values are returned signed (no clamping at zero) so order violations show
up in tests instead of being masked.
"""

from __future__ import annotations

import numpy as np

from .linalg import as_sym_array, cholesky, solve_spd


def sigma_measure(a, g) -> float:
    """Inverse-weighted trace gap trace((g - a) a^{-1}) for SPD ``a``.

    Computed with Cholesky solves column by column; never forms an explicit
    inverse.  Nonnegative whenever ``g`` dominates ``a`` in the
    semidefinite order.
    """
    am = as_sym_array(a)
    gm = as_sym_array(g)
    if am.shape != gm.shape:
        raise ValueError(f"dimension mismatch: {am.shape} vs {gm.shape}")
    fac = cholesky(am)
    return float(np.trace(solve_spd(fac, gm - am)))


def tau_measure(a, g) -> float:
    """Trace gap trace(g - a)."""
    am = as_sym_array(a)
    gm = as_sym_array(g)
    if am.shape != gm.shape:
        raise ValueError(f"dimension mismatch: {am.shape} vs {gm.shape}")
    return float(np.trace(gm) - np.trace(am))


def lambda_measure(grad, hess) -> float:
    """Gradient norm weighted by the inverse of an SPD matrix.

    Returns sqrt(grad' hess^{-1} grad); zero gradient gives exactly zero.
    """
    g = np.asarray(grad, dtype=np.float64)
    hm = as_sym_array(hess)
    if g.shape != (hm.shape[0],):
        raise ValueError(f"gradient shape {g.shape} does not match dim {hm.shape[0]}")
    if not g.any():
        return 0.0
    fac = cholesky(hm)
    return float(np.sqrt(max(g @ solve_spd(fac, g), 0.0)))


def eta_trace_ratio(hess, g) -> float:
    """Trace gap relative to the target: trace(g - hess) / trace(hess)."""
    hm = as_sym_array(hess)
    gm = as_sym_array(g)
    if hm.shape != gm.shape:
        raise ValueError(f"dimension mismatch: {hm.shape} vs {gm.shape}")
    return (float(np.trace(gm)) - float(np.trace(hm))) / float(np.trace(hm))
