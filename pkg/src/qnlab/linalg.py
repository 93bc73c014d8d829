"""Dense symmetric / SPD linear algebra.

Validated symmetric storage, Cholesky factorization and solves, extreme
eigenvalues, and positive-semidefinite order checks.  Everything is dense
float64; intended problem sizes are a few hundred rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .rng import RngState, gaussians, rng_from_seed

SYMMETRY_REL_TOL = 1e-12
PSD_ORDER_TOL = 1e-9

# full eigensolve below this size; power iteration above (see extreme_eigs)
_DENSE_EIG_LIMIT = 512


class NotPD(ValueError):
    """Matrix is not positive definite at the requested tolerance."""


class EigsNotConverged(RuntimeError):
    """Iterative eigenvalue estimation ran out of iterations.

    Carries the best available estimate in ``best``.
    """

    def __init__(self, message, best):
        super().__init__(message)
        self.best = best


def _as_square(entries) -> np.ndarray:
    m = np.array(entries, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] < 1:
        raise ValueError("matrix dimension must be at least 1")
    return m


class SymMatrix:
    """Dense symmetric matrix with symmetry enforced on construction.

    Input that is asymmetric beyond ``rel_tol`` (relative to the largest
    entry) is rejected; below that the entries are replaced by
    ``(M + M.T) / 2`` so stored entries are exactly symmetric.  The backing
    array is read-only; mutation goes through copy-and-modify.
    """

    __slots__ = ("_m",)

    def __init__(self, entries, rel_tol: float = SYMMETRY_REL_TOL):
        m = _as_square(entries)
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix entries must be finite")
        scale = np.abs(m).max()
        asym = np.abs(m - m.T).max()
        if asym > rel_tol * max(scale, 1e-300):
            raise ValueError(
                f"matrix asymmetric beyond tolerance: |M - M.T| = {asym:.3e}, "
                f"scale = {scale:.3e}"
            )
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        self._m = m

    @classmethod
    def identity(cls, dim: int) -> "SymMatrix":
        return cls(np.eye(dim))

    @classmethod
    def diag(cls, values) -> "SymMatrix":
        return cls(np.diag(np.asarray(values, dtype=np.float64)))

    @property
    def dim(self) -> int:
        return self._m.shape[0]

    @property
    def mat(self) -> np.ndarray:
        """Read-only backing array."""
        return self._m

    def diagonal(self) -> np.ndarray:
        return self._m.diagonal().copy()

    def __array__(self, dtype=None, copy=None):
        if dtype is not None:
            return self._m.astype(dtype)
        return self._m

    def __repr__(self):
        return f"SymMatrix(dim={self.dim})"


def as_sym_array(m, rel_tol: float = SYMMETRY_REL_TOL) -> np.ndarray:
    """Coerce a SymMatrix or array-like to a validated symmetric ndarray."""
    if isinstance(m, SymMatrix):
        return m.mat
    return SymMatrix(m, rel_tol=rel_tol).mat


@dataclass(frozen=True)
class CholFactor:
    """Lower-triangular factor with ``lower @ lower.T`` equal to the source."""

    lower: np.ndarray

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def reconstruct(self) -> np.ndarray:
        return self.lower @ self.lower.T


def cholesky(m, rel_tol: float = 1e-12) -> CholFactor:
    """Factor an SPD matrix, raising :class:`NotPD` on a small pivot.

    A pivot at or below ``rel_tol`` times the largest diagonal entry counts
    as loss of positive definiteness.
    """
    a = as_sym_array(m)
    d = a.shape[0]
    threshold = rel_tol * max(float(a.diagonal().max(initial=0.0)), 0.0)
    lower = np.zeros_like(a)
    for j in range(d):
        pivot = a[j, j] - lower[j, :j] @ lower[j, :j]
        if not np.isfinite(pivot) or pivot <= threshold:
            raise NotPD(
                f"pivot {pivot:.6e} at column {j} is at or below "
                f"threshold {threshold:.6e}"
            )
        ljj = np.sqrt(pivot)
        lower[j, j] = ljj
        if j + 1 < d:
            lower[j + 1:, j] = (a[j + 1:, j] - lower[j + 1:, :j] @ lower[j, :j]) / ljj
    lower.setflags(write=False)
    return CholFactor(lower)


def solve_spd(fac: CholFactor, rhs) -> np.ndarray:
    """Solve ``(L @ L.T) x = rhs`` for a vector or matrix right-hand side."""
    b = np.asarray(rhs, dtype=np.float64)
    if b.shape[0] != fac.dim:
        raise ValueError(f"rhs length {b.shape[0]} does not match dim {fac.dim}")
    y = scipy.linalg.solve_triangular(fac.lower, b, lower=True)
    return scipy.linalg.solve_triangular(fac.lower.T, y, lower=False)


def inverse_spd(m) -> np.ndarray:
    """Inverse of an SPD matrix via Cholesky solves, symmetrized."""
    fac = cholesky(m)
    inv = solve_spd(fac, np.eye(fac.dim))
    return 0.5 * (inv + inv.T)


def inv_sqrt_spd(m) -> np.ndarray:
    """Symmetric inverse square root of an SPD matrix (eigendecomposition)."""
    a = as_sym_array(m)
    w, v = np.linalg.eigh(a)
    if w[0] <= 0:
        raise NotPD(f"smallest eigenvalue {w[0]:.6e} is not positive")
    return (v / np.sqrt(w)) @ v.T


def _power_largest(mat: np.ndarray, iters: int, tol: float):
    """Largest eigenvalue of a PSD matrix by power iteration.

    Returns (estimate, converged).  The start vector is deterministic and
    slightly graded to avoid sitting in an invariant subspace.
    """
    d = mat.shape[0]
    v = 1.0 + np.arange(d) / (7.0 * d + 3.0)
    v /= np.linalg.norm(v)
    q_prev = float(v @ (mat @ v))
    for _ in range(iters):
        w = mat @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0, True
        v = w / norm
        q = float(v @ (mat @ v))
        if abs(q - q_prev) <= tol * max(1.0, abs(q)):
            return q, True
        q_prev = q
    return q_prev, False


def extreme_eigs(m, iters: int = 5000, tol: float = 1e-12, method: str = "auto"):
    """Smallest and largest eigenvalues of a symmetric matrix.

    Implementation choice: a full LAPACK eigensolve for ``dim <= 512``
    (where ``iters``/``tol`` are not needed), shifted power iteration above
    that.  ``method`` forces one path ("dense" or "power") for testing.
    Raises :class:`EigsNotConverged` with the best estimate if the power
    iterations run out.
    """
    a = as_sym_array(m)
    d = a.shape[0]
    if method == "auto":
        method = "dense" if d <= _DENSE_EIG_LIMIT else "power"
    if method == "dense":
        w = np.linalg.eigvalsh(a)
        return float(w[0]), float(w[-1])
    if method != "power":
        raise ValueError(f"unknown method {method!r}")
    # s bounds the spectral radius, so s*I - a and a + s*I are both PSD
    s = float(np.abs(a).sum(axis=1).max())
    hi, ok_hi = _power_largest(a + s * np.eye(d), iters, tol)
    lo, ok_lo = _power_largest(s * np.eye(d) - a, iters, tol)
    lam_max = hi - s
    lam_min = s - lo
    if not (ok_hi and ok_lo):
        raise EigsNotConverged(
            f"power iteration did not converge within {iters} iterations",
            best=(lam_min, lam_max),
        )
    return lam_min, lam_max


def psd_order_holds(a, b, tol: float = PSD_ORDER_TOL) -> bool:
    """True iff ``a`` is below ``b`` in the semidefinite order, up to tol.

    The test is ``lambda_min(b - a) >= -tol * (1 + ||b - a||)`` with the
    spectral norm.
    """
    am = as_sym_array(a)
    bm = as_sym_array(b)
    if am.shape != bm.shape:
        raise ValueError(f"dimension mismatch: {am.shape} vs {bm.shape}")
    w = np.linalg.eigvalsh(bm - am)
    norm = max(abs(float(w[0])), abs(float(w[-1])))
    return float(w[0]) >= -tol * (1.0 + norm)


def random_spd(dim: int, kappa: float, seed_or_state) -> SymMatrix:
    """Random SPD matrix with eigenvalues log-spaced on [1, 0.999 * kappa].

    ``kappa`` acts as the smoothness bound: the top eigenvalue sits a
    fraction below it so that a start at ``kappa * I`` dominates the matrix
    with a full-rank gap (rank-one schemes then take exactly ``dim`` steps
    to land).  The eigenbasis comes from the QR factorization of a Gaussian
    matrix drawn from the package RNG, so instances are reproducible by
    seed.
    """
    if kappa < 1.0:
        raise ValueError("kappa must be at least 1")
    state = seed_or_state if isinstance(seed_or_state, RngState) else rng_from_seed(seed_or_state)
    z, _ = gaussians(dim * dim, state)
    q, r = np.linalg.qr(z.reshape(dim, dim))
    q = q * np.sign(np.where(r.diagonal() == 0.0, 1.0, r.diagonal()))
    top = max(kappa * (1.0 - 1e-3), 1.0)
    eigs = np.geomspace(1.0, top, dim) if dim > 1 else np.array([1.0])
    return SymMatrix((q * eigs) @ q.T, rel_tol=1e-10)
