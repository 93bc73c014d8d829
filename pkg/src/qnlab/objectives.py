"""Test objectives: quadratic, regularized log-sum-exp, and l2-regularized
logistic regression, plus synthetic data construction and a LIBSVM-format
parser.

Every objective exposes value/gradient, a Hessian-vector product, the
Hessian diagonal, and the constants (mu, lip_L, self_concordant_M).  Dense
Hessian assembly is provided for instrumentation and test oracles only and
is guarded to dim <= 1024; the solvers themselves touch the Hessian only
through the diagonal and vector products.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
import scipy.special

from .linalg import SymMatrix, as_sym_array, cholesky, extreme_eigs, solve_spd
from .rng import rng_from_seed, uniforms, gaussians
from .directions import sample_sphere

DENSE_HESSIAN_LIMIT = 1024


class Objective(ABC):
    """Smooth strongly convex objective with Hessian access by parts."""

    dim: int
    mu: float
    lip_L: float
    self_concordant_M: float

    @property
    def kappa(self) -> float:
        return self.lip_L / self.mu

    @abstractmethod
    def eval(self, x) -> float: ...

    @abstractmethod
    def grad(self, x) -> np.ndarray: ...

    @abstractmethod
    def hess_vec(self, x, v) -> np.ndarray: ...

    @abstractmethod
    def hess_diag(self, x) -> np.ndarray: ...

    @abstractmethod
    def hess(self, x) -> SymMatrix: ...

    def _check_dense_ok(self):
        if self.dim > DENSE_HESSIAN_LIMIT:
            raise ValueError(
                f"dense Hessian assembly is limited to dim <= {DENSE_HESSIAN_LIMIT}"
            )

    def _vec(self, x) -> np.ndarray:
        v = np.asarray(x, dtype=np.float64)
        if v.shape != (self.dim,):
            raise ValueError(f"expected shape ({self.dim},), got {v.shape}")
        return v


def _frozen(array) -> np.ndarray:
    """Private read-only copy, so objectives stay immutable after construction."""
    out = np.array(array, dtype=np.float64)
    out.setflags(write=False)
    return out


class QuadraticObjective(Objective):
    """f(x) = x'Ax/2 - b'x for SPD ``A``; the Hessian is constant."""

    def __init__(self, a, b):
        self._a = as_sym_array(a)
        self.dim = self._a.shape[0]
        self._b = _frozen(self._vec(b))
        self._fac = cholesky(self._a)
        self.x_star = solve_spd(self._fac, self._b)
        lo, hi = extreme_eigs(self._a)
        self.mu = lo
        self.lip_L = hi
        self.self_concordant_M = 0.0

    @property
    def a(self) -> np.ndarray:
        return self._a

    @property
    def b(self) -> np.ndarray:
        return self._b

    def eval(self, x):
        v = self._vec(x)
        return 0.5 * float(v @ (self._a @ v)) - float(self._b @ v)

    def grad(self, x):
        return self._a @ self._vec(x) - self._b

    def hess_vec(self, x, v):
        return self._a @ self._vec(v)

    def hess_diag(self, x):
        return self._a.diagonal().copy()

    def hess(self, x):
        self._check_dense_ok()
        return SymMatrix(self._a)


class LogSumExpObjective(Objective):
    """Soft-max coupling plus a quadratic term and a ridge.

    f(x) = ln sum_j exp(c_j'x - b_j) + sum_j (c_j'x)^2 / 2 + gamma |x|^2 / 2

    with coefficients ``c`` of shape (dim, m).  The soft-max weights are
    computed with a max shift for overflow safety.  Constants:
    lip_L = 2 lambda_max(C C') + gamma, mu = gamma (a valid lower bound),
    and self_concordant_M = 2.
    """

    def __init__(self, c, b_coeffs, gamma: float):
        self._c = _frozen(np.atleast_2d(np.asarray(c, dtype=np.float64)))
        self.dim = self._c.shape[0]
        self._b = _frozen(b_coeffs)
        if self._b.shape != (self._c.shape[1],):
            raise ValueError("b_coeffs length must match the number of columns of c")
        if gamma <= 0.0:
            raise ValueError("gamma must be positive")
        self.gamma = float(gamma)
        # C C' and C'C share nonzero spectrum; eig the smaller Gram matrix
        d, m = self._c.shape
        gram = self._c @ self._c.T if d <= m else self._c.T @ self._c
        self.mu = self.gamma
        self.lip_L = 2.0 * extreme_eigs(gram)[1] + self.gamma
        self.self_concordant_M = 2.0

    @property
    def c(self) -> np.ndarray:
        return self._c

    @property
    def n_terms(self) -> int:
        return self._c.shape[1]

    def _weights(self, x) -> np.ndarray:
        z = self._c.T @ x - self._b
        return scipy.special.softmax(z)

    def eval(self, x):
        v = self._vec(x)
        z = self._c.T @ v - self._b
        lin = self._c.T @ v
        return float(scipy.special.logsumexp(z)) + 0.5 * float(lin @ lin) \
            + 0.5 * self.gamma * float(v @ v)

    def grad(self, x):
        v = self._vec(x)
        pi = self._weights(v)
        return self._c @ pi + self._c @ (self._c.T @ v) + self.gamma * v

    def hess_vec(self, x, v):
        xv = self._vec(x)
        hv = self._vec(v)
        pi = self._weights(xv)
        g = self._c @ pi
        return self._c @ ((pi + 1.0) * (self._c.T @ hv)) - (g @ hv) * g \
            + self.gamma * hv

    def hess_diag(self, x):
        v = self._vec(x)
        pi = self._weights(v)
        g = self._c @ pi
        return (self._c ** 2) @ (pi + 1.0) - g ** 2 + self.gamma

    def hess(self, x):
        self._check_dense_ok()
        v = self._vec(x)
        pi = self._weights(v)
        g = self._c @ pi
        h = (self._c * (pi + 1.0)) @ self._c.T - np.outer(g, g) \
            + self.gamma * np.eye(self.dim)
        return SymMatrix(h, rel_tol=1e-10)


class LogisticObjective(Objective):
    """l2-regularized logistic regression on samples X (dim, n), labels +-1.

    f(w) = sum_i ln(1 + exp(-y_i w'x_i)) + gamma |w|^2 / 2.

    lip_L = lambda_max(X X') / 4 + gamma and mu = gamma.  No tight
    self-concordance constant is known for this loss, so
    ``self_concordant_M`` defaults to 0 (no correction) and can be
    overridden.
    """

    def __init__(self, x_samples, labels, gamma: float, self_concordant_M: float = 0.0):
        self._x = _frozen(np.atleast_2d(np.asarray(x_samples, dtype=np.float64)))
        self.dim = self._x.shape[0]
        self._y = _frozen(labels)
        if self._y.shape != (self._x.shape[1],):
            raise ValueError("labels length must match the number of samples")
        if self._y.size and not np.all(np.isin(self._y, (-1.0, 1.0))):
            raise ValueError("labels must be +1 or -1")
        if gamma <= 0.0:
            raise ValueError("gamma must be positive")
        self.gamma = float(gamma)
        self.mu = self.gamma
        if self._x.shape[1]:
            d, n = self._x.shape
            gram = self._x @ self._x.T if d <= n else self._x.T @ self._x
            self.lip_L = extreme_eigs(gram)[1] / 4.0 + self.gamma
        else:
            self.lip_L = self.gamma
        self.self_concordant_M = float(self_concordant_M)

    @property
    def n_samples(self) -> int:
        return self._x.shape[1]

    def _margins(self, w) -> np.ndarray:
        return self._y * (self._x.T @ w)

    def eval(self, w):
        v = self._vec(w)
        t = self._margins(v)
        return float(np.logaddexp(0.0, -t).sum()) + 0.5 * self.gamma * float(v @ v)

    def grad(self, w):
        v = self._vec(w)
        t = self._margins(v)
        return -self._x @ (self._y * scipy.special.expit(-t)) + self.gamma * v

    def _curvature_weights(self, w) -> np.ndarray:
        t = self._margins(w)
        s = scipy.special.expit(t)
        return s * (1.0 - s)

    def hess_vec(self, x, v):
        xv = self._vec(x)
        hv = self._vec(v)
        weights = self._curvature_weights(xv)
        return self._x @ (weights * (self._x.T @ hv)) + self.gamma * hv

    def hess_diag(self, x):
        v = self._vec(x)
        return (self._x ** 2) @ self._curvature_weights(v) + self.gamma

    def hess(self, x):
        self._check_dense_ok()
        v = self._vec(x)
        weights = self._curvature_weights(v)
        h = (self._x * weights) @ self._x.T + self.gamma * np.eye(self.dim)
        return SymMatrix(h, rel_tol=1e-10)


# ---------------------------------------------------------------------------
# synthetic data and starting points
# ---------------------------------------------------------------------------

def make_logsumexp_synthetic(d: int, m: int, gamma: float, seed: int) -> LogSumExpObjective:
    """Random instance with the minimizer pinned at the origin.

    Raw coefficients and offsets are uniform in [-1, 1]; each column is
    then shifted by the soft-max gradient at zero, which makes the full
    gradient vanish at the origin, so x* = 0 by strong convexity.
    """
    if d < 1 or m < 1:
        raise ValueError("d and m must be at least 1")
    state = rng_from_seed(seed)
    flat, state = uniforms(d * m, state, -1.0, 1.0)
    c_raw = flat.reshape(d, m)
    b, state = uniforms(m, state, -1.0, 1.0)
    pi0 = scipy.special.softmax(-b)
    c = c_raw - (c_raw @ pi0)[:, None]
    return LogSumExpObjective(c, b, gamma)


def make_logistic_synthetic(d: int, n: int, gamma: float, seed: int,
                            self_concordant_M: float = 0.0) -> LogisticObjective:
    """Random separable-ish instance: uniform features, labels from a random
    hyperplane.  Convenience for demos and tests."""
    state = rng_from_seed(seed)
    flat, state = uniforms(d * n, state, -1.0, 1.0)
    x = flat.reshape(d, n)
    w_true, state = gaussians(d, state)
    y = np.where(x.T @ w_true >= 0.0, 1.0, -1.0)
    return LogisticObjective(x, y, gamma, self_concordant_M)


def initial_point_on_sphere(d: int, radius: float, seed: int, center=None) -> np.ndarray:
    """Uniform point on the radius-``radius`` sphere around ``center``."""
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    u, _ = sample_sphere(d, rng_from_seed(seed))
    x = radius * u
    if center is not None:
        x = x + np.asarray(center, dtype=np.float64)
    return x


# ---------------------------------------------------------------------------
# LIBSVM ingestion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SparseSample:
    """One labeled sample: 1-based feature indices, strictly increasing."""

    label: int
    features: tuple


class LibsvmFormatError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


_LABELS = {"1": 1, "+1": 1, "-1": -1, "0": -1}


def parse_libsvm(lines, expected_dim: int | None = None):
    """Parse LIBSVM text ("label idx:val idx:val ...") into samples.

    ``lines`` is any iterable of strings (a file object works).  Labels map
    to +-1 ("0" counts as -1); '#' comments are stripped; blank lines are
    skipped.  Returns (list of :class:`SparseSample`, inferred dim), where
    dim is the largest index seen or ``expected_dim`` if that is larger.
    Malformed lines, non-increasing indices, indices beyond
    ``expected_dim``, and query-id fields raise :class:`LibsvmFormatError`
    with the line number.
    """
    samples = []
    max_index = 0
    for line_no, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        label_token = tokens[0]
        if label_token not in _LABELS:
            raise LibsvmFormatError(line_no, f"unrecognized label {label_token!r}")
        label = _LABELS[label_token]
        features = []
        previous = 0
        for token in tokens[1:]:
            if token.startswith("qid:"):
                raise LibsvmFormatError(line_no, "query-id fields are not supported")
            idx_text, sep, value_text = token.partition(":")
            if not sep:
                raise LibsvmFormatError(line_no, f"expected idx:value, got {token!r}")
            try:
                index = int(idx_text)
                value = float(value_text)
            except ValueError:
                raise LibsvmFormatError(line_no, f"malformed feature {token!r}") from None
            if index < 1:
                raise LibsvmFormatError(line_no, f"index {index} must be >= 1")
            if index <= previous:
                raise LibsvmFormatError(
                    line_no, f"indices must be strictly increasing (saw {index} after {previous})"
                )
            if expected_dim is not None and index > expected_dim:
                raise LibsvmFormatError(
                    line_no, f"index {index} exceeds expected dim {expected_dim}"
                )
            previous = index
            features.append((index, value))
        max_index = max(max_index, previous)
        samples.append(SparseSample(label=label, features=tuple(features)))
    dim = max(max_index, expected_dim or 0)
    return samples, dim


def load_libsvm(path, expected_dim: int | None = None):
    with open(path, "r", encoding="utf-8") as handle:
        return parse_libsvm(handle, expected_dim)


def samples_to_dense(samples, dim: int):
    """Stack sparse samples into dense X (dim, n) and labels y (n,)."""
    n = len(samples)
    x = np.zeros((dim, n))
    y = np.zeros(n)
    for j, sample in enumerate(samples):
        y[j] = sample.label
        for index, value in sample.features:
            x[index - 1, j] = value
    return x, y
