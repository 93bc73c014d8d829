"""Direction selection for the update schemes.

Greedy selectors pick a coordinate axis maximizing a per-step progress
score; they take diagonals (not full matrices) so the general-objective
driver can feed Hessian-diagonal evaluations directly.  Random samplers
draw from isotropic distributions, meaning E[uu'/u'u] = I/d, and are pure
functions of an explicit :class:`~qnlab.rng.RngState`, so a fixed seed
yields bit-identical traces.

Indices returned by the greedy selectors are 0-based.  Ties break to the
lowest index, which keeps traces deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import as_sym_array
from .rng import RngState, gaussians

GREEDY_BROYDEN = "greedy_broyden"
GREEDY_SR1 = "greedy_sr1"
GREEDY_BFGS = "greedy_bfgs"
RANDOM_SPHERE = "random_sphere"
RANDOM_GAUSSIAN = "random_gaussian"

VARIANTS = (GREEDY_BROYDEN, GREEDY_SR1, GREEDY_BFGS, RANDOM_SPHERE, RANDOM_GAUSSIAN)
_RANDOM = (RANDOM_SPHERE, RANDOM_GAUSSIAN)


@dataclass(frozen=True)
class DirectionStrategy:
    """A selection variant plus the seed used by the random ones.

    ``greedy_bfgs`` costs O(d^3) per step because it weighs coordinates by
    the inverse target; solvers reject it unless explicitly allowed.
    """

    variant: str
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown direction variant {self.variant!r}")

    @property
    def is_random(self) -> bool:
        return self.variant in _RANDOM


def greedy_broyden_dir(g_diag, a_diag) -> int:
    """Coordinate maximizing the diagonal ratio g_ii / a_ii."""
    gd = np.asarray(g_diag, dtype=np.float64)
    ad = np.asarray(a_diag, dtype=np.float64)
    if gd.shape != ad.shape:
        raise ValueError("diagonal length mismatch")
    if np.any(ad <= 0.0):
        raise ValueError("target diagonal must be strictly positive")
    return int(np.argmax(gd / ad))


def greedy_sr1_dir(g_diag, a_diag) -> int:
    """Coordinate maximizing the diagonal gap g_ii - a_ii."""
    gd = np.asarray(g_diag, dtype=np.float64)
    ad = np.asarray(a_diag, dtype=np.float64)
    if gd.shape != ad.shape:
        raise ValueError("diagonal length mismatch")
    return int(np.argmax(gd - ad))


def greedy_bfgs_dir(l_inv_weighted) -> int:
    """Coordinate maximizing the diagonal of the precomputed weight matrix.

    The caller supplies L^{-T} A^{-1} L^{-1} (symmetric PSD); assembling it
    is the O(d^3) part that keeps this selector out of default configs.
    """
    m = as_sym_array(l_inv_weighted, rel_tol=1e-8)
    return int(np.argmax(m.diagonal()))


def basis_vector(dim: int, index: int) -> np.ndarray:
    e = np.zeros(dim)
    e[index] = 1.0
    return e


def sample_gaussian(dim: int, state: RngState) -> tuple[np.ndarray, RngState]:
    """Standard normal vector; deterministic given the stream state."""
    if dim < 1:
        raise ValueError("dim must be at least 1")
    return gaussians(dim, state)


def sample_sphere(dim: int, state: RngState) -> tuple[np.ndarray, RngState]:
    """Uniform unit vector (normalized Gaussian); deterministic given state."""
    if dim < 1:
        raise ValueError("dim must be at least 1")
    while True:
        z, state = gaussians(dim, state)
        norm = np.linalg.norm(z)
        if norm > 0.0:  # zero draw has probability zero; resample regardless
            return z / norm, state
