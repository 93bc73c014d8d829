"""Broyden-family Hessian-approximation updates.

Primal updates on the approximation ``G`` of an SPD target ``A`` along a
direction ``u``:

* SR1 (rank one):   G - (G-A)uu'(G-A) / u'(G-A)u
* DFP (rank two):   G - (Auu'G + Guu'A)/u'Au + (u'Gu/u'Au + 1) Auu'A/u'Au
* BFGS (rank two):  G - Guu'G/u'Gu + Auu'A/u'Au
* Broyden family:   tau * DFP-form + (1 - tau) * SR1-form, tau in [0, 1]

with the degenerate branch: if ``G u = A u`` the update returns ``G``
unchanged.  In floating point the branch fires when the SR1 denominator
``u'(G-A)u`` falls at or below ``skip_tol * ||G - A||_F * ||u||^2`` (a
relative threshold is unavoidable in floating point and this scaling is
the standard SR1 safeguard), and also when ``||(G-A)u||`` is at rounding
level relative to ``||Gu|| + ||Au||``, which is the literal "Gu = Au" at
working precision.  Without the second clause, runs that continue past
exact termination would keep updating a pure-noise residual and amplify
it.

Matching inverse updates maintain ``H = G^{-1}`` at O(d^2) per step, and a
square-factor update maintains ``L`` with ``L'L = H`` for the scaled BFGS
scheme.  All primal results are symmetrized, since the formulas are
symmetric in exact arithmetic and symmetrization bounds drift.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .linalg import SymMatrix, as_sym_array, cholesky, inv_sqrt_spd, solve_spd

DEFAULT_SKIP_TOL = 1e-12
# (G-A)u below this fraction of |Gu| + |Au| counts as Gu = Au exactly
_ACTION_MATCH_RTOL = 1e-13

_RULE_KINDS = ("sr1", "bfgs", "dfp", "broyden")


@dataclass(frozen=True)
class UpdateRule:
    """One update family member: sr1, bfgs, dfp, or broyden with a tau."""

    kind: str
    tau: Optional[float] = None

    def __post_init__(self):
        if self.kind not in _RULE_KINDS:
            raise ValueError(f"unknown update rule {self.kind!r}")
        if self.kind == "broyden":
            if self.tau is None or not 0.0 <= self.tau <= 1.0:
                raise ValueError("broyden rule needs tau in [0, 1]")
        elif self.tau is not None:
            raise ValueError(f"rule {self.kind!r} takes no tau")

    @classmethod
    def sr1(cls):
        return cls("sr1")

    @classmethod
    def bfgs(cls):
        return cls("bfgs")

    @classmethod
    def dfp(cls):
        return cls("dfp")

    @classmethod
    def broyden(cls, tau: float):
        return cls("broyden", float(tau))

    @classmethod
    def parse(cls, text: str) -> "UpdateRule":
        """Parse "sr1", "bfgs", "dfp", or "broyden:<tau>"."""
        text = text.strip().lower()
        if text.startswith("broyden"):
            _, _, tail = text.partition(":")
            if not tail:
                raise ValueError("broyden rule needs a tau, e.g. broyden:0.5")
            return cls.broyden(float(tail))
        return cls(text)

    @property
    def label(self) -> str:
        if self.kind == "broyden":
            return f"broyden_tau{self.tau:g}"
        return self.kind


@dataclass
class ApproxState:
    """Approximation bundle: primal ``g``, inverse ``h``, optional factor ``l``.

    The factor is a general square matrix with ``l.T @ l = h`` (it starts
    as a symmetric inverse square root and does not stay triangular).
    """

    g: np.ndarray
    h: np.ndarray
    l: Optional[np.ndarray] = None

    @classmethod
    def initialize(cls, g0, with_factor: bool = False) -> "ApproxState":
        gm = as_sym_array(g0).copy()
        fac = cholesky(gm)
        h = solve_spd(fac, np.eye(gm.shape[0]))
        h = 0.5 * (h + h.T)
        l = inv_sqrt_spd(gm) if with_factor else None
        return cls(g=gm, h=h, l=l)

    @property
    def dim(self) -> int:
        return self.g.shape[0]


def _symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def _check_direction(u, dim: int) -> np.ndarray:
    v = np.asarray(u, dtype=np.float64)
    if v.shape != (dim,):
        raise ValueError(f"direction shape {v.shape} does not match dim {dim}")
    if not np.all(np.isfinite(v)):
        raise ValueError("direction has non-finite entries")
    return v


def _pair(g, a, u):
    gm = as_sym_array(g)
    am = as_sym_array(a)
    if gm.shape != am.shape:
        raise ValueError(f"dimension mismatch: {gm.shape} vs {am.shape}")
    return gm, am, _check_direction(u, gm.shape[0])


def _dense_skip_scale(gm, am, u):
    return float(np.linalg.norm(gm - am)) * float(u @ u)


# ---------------------------------------------------------------------------
# kernels: operate on precomputed actions gu = G u and au = A u, so the
# solvers can run them matrix-free (au from a Hessian-vector product)
# ---------------------------------------------------------------------------

def _actions_match(ru, au, gu) -> bool:
    return float(np.linalg.norm(ru)) <= _ACTION_MATCH_RTOL * (
        float(np.linalg.norm(au)) + float(np.linalg.norm(gu)))


def sr1_kernel(g, u, au, gu, skip_scale, skip_tol):
    """SR1 step from actions; returns (new matrix, skipped flag)."""
    ru = gu - au
    den = float(u @ ru)
    if not np.isfinite(den):
        raise ValueError("non-finite SR1 denominator; upstream state corrupt")
    if den <= skip_tol * skip_scale or _actions_match(ru, au, gu):
        return g, True
    return _symmetrize(g - np.outer(ru, ru) / den), False


def dfp_kernel(g, u, au, gu):
    uau = float(u @ au)
    if uau <= 0.0:
        raise ValueError("direction has nonpositive target curvature (zero direction?)")
    ugu = float(u @ gu)
    cross = np.outer(au, gu)
    out = g - (cross + cross.T) / uau + ((ugu / uau + 1.0) / uau) * np.outer(au, au)
    return _symmetrize(out)


def bfgs_kernel(g, u, au, gu):
    uau = float(u @ au)
    ugu = float(u @ gu)
    if uau <= 0.0 or ugu <= 0.0:
        raise ValueError("direction has nonpositive curvature (zero direction?)")
    out = g - np.outer(gu, gu) / ugu + np.outer(au, au) / uau
    return _symmetrize(out)


def broyden_kernel(g, u, au, gu, tau, skip_scale, skip_tol):
    """Convex combination of the DFP and SR1 forms; (matrix, skipped)."""
    ru = gu - au
    den_r = float(u @ ru)
    if not np.isfinite(den_r):
        raise ValueError("non-finite Broyden denominator; upstream state corrupt")
    if den_r <= skip_tol * skip_scale or _actions_match(ru, au, gu):
        # Gu = Au makes both forms leave G unchanged
        return g, True
    out = g - ((1.0 - tau) / den_r) * np.outer(ru, ru)
    if tau != 0.0:
        uau = float(u @ au)
        if uau <= 0.0:
            raise ValueError("direction has nonpositive target curvature")
        ugu = float(u @ gu)
        cross = np.outer(au, gu)
        out = out - (tau / uau) * (cross + cross.T) \
            + (tau * (ugu / uau + 1.0) / uau) * np.outer(au, au)
    return _symmetrize(out), False


def sr1_inverse_kernel(h, u, au, skip_tol):
    """Inverse SR1 step: H + ww'/(au'w) with w = (I - H A)u; (matrix, skipped)."""
    hau = h @ au
    w = u - hau
    den = float(au @ w)
    scale = float(np.linalg.norm(au)) * float(np.linalg.norm(w))
    if den <= skip_tol * scale or den <= 0.0:
        return h, True
    return _symmetrize(h + np.outer(w, w) / den), False


def bfgs_inverse_kernel(h, u, au):
    uau = float(u @ au)
    if uau <= 0.0:
        raise ValueError("direction has nonpositive target curvature (zero direction?)")
    w = h @ au
    cross = np.outer(u, w)
    quad = float(au @ w)
    out = h - (cross + cross.T) / uau + ((quad / uau + 1.0) / uau) * np.outer(u, u)
    return _symmetrize(out)


def broyden_inverse_kernel(h, u, au, gu, tau, skip_scale, skip_tol):
    """Inverse of the Broyden-family step via a rank-two Woodbury identity.

    The primal correction is W S W' with W = [au, gu], so
    (G + W S W')^{-1} = H - H W (I + S W'HW)^{-1} S W'H, which needs only a
    2x2 solve.  Covers every tau in [0, 1] including the endpoints.
    """
    ru = gu - au
    den_r = float(u @ ru)
    if den_r <= skip_tol * skip_scale or _actions_match(ru, au, gu):
        return h, True
    uau = float(u @ au)
    if uau <= 0.0:
        raise ValueError("direction has nonpositive target curvature")
    ugu = float(u @ gu)
    s = np.zeros((2, 2))
    c = (1.0 - tau) / den_r
    s[0, 0] = -c
    s[1, 1] = -c
    s[0, 1] = s[1, 0] = c
    if tau != 0.0:
        s[0, 0] += tau * (ugu / uau + 1.0) / uau
        s[0, 1] -= tau / uau
        s[1, 0] -= tau / uau
    w = np.column_stack([au, gu])
    hw = h @ w
    m2 = np.eye(2) + s @ (w.T @ hw)
    out = h - hw @ np.linalg.solve(m2, s @ hw.T)
    return _symmetrize(out), False


def bfgs_factor_kernel(l, u, au, u_tilde):
    """Factor step L+ = L - (L au - v)u'/(u'au), v = (|u|_A/|u_tilde|) u_tilde."""
    uau = float(u @ au)
    tn = float(np.linalg.norm(u_tilde))
    if tn == 0.0:
        raise ValueError("scaled direction u_tilde must be nonzero")
    if uau <= 0.0:
        raise ValueError("direction has nonpositive target curvature")
    v = (np.sqrt(uau) / tn) * np.asarray(u_tilde, dtype=np.float64)
    return l - np.outer(l @ au - v, u) / uau


# ---------------------------------------------------------------------------
# public dense operations
# ---------------------------------------------------------------------------

def broyden_update(g, a, u, tau: float, skip_tol: float = DEFAULT_SKIP_TOL) -> SymMatrix:
    """Broyden-family update of ``g`` toward ``a`` along ``u``."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    gm, am, v = _pair(g, a, u)
    out, _ = broyden_kernel(gm, v, am @ v, gm @ v, tau,
                            _dense_skip_scale(gm, am, v), skip_tol)
    if not np.all(np.isfinite(out)):
        raise ValueError("update produced non-finite entries (PD loss upstream?)")
    return SymMatrix(out)


def sr1_update(g, a, u, skip_tol: float = DEFAULT_SKIP_TOL) -> SymMatrix:
    """Rank-one update; skips when u'(G-A)u is small relative to ||G-A||_F."""
    gm, am, v = _pair(g, a, u)
    out, _ = sr1_kernel(gm, v, am @ v, gm @ v,
                        _dense_skip_scale(gm, am, v), skip_tol)
    return SymMatrix(out)


def bfgs_update(g, a, u) -> SymMatrix:
    gm, am, v = _pair(g, a, u)
    return SymMatrix(bfgs_kernel(gm, v, am @ v, gm @ v))


def dfp_update(g, a, u) -> SymMatrix:
    gm, am, v = _pair(g, a, u)
    return SymMatrix(dfp_kernel(gm, v, am @ v, gm @ v))


def sr1_inverse_update(h, a, u, skip_tol: float = DEFAULT_SKIP_TOL) -> SymMatrix:
    """Inverse counterpart of :func:`sr1_update` for ``h = g^{-1}``."""
    hm, am, v = _pair(h, a, u)
    out, _ = sr1_inverse_kernel(hm, v, am @ v, skip_tol)
    return SymMatrix(out)


def bfgs_inverse_update(h, a, u) -> SymMatrix:
    """Inverse counterpart of :func:`bfgs_update` for ``h = g^{-1}``."""
    hm, am, v = _pair(h, a, u)
    return SymMatrix(bfgs_inverse_kernel(hm, v, am @ v))


def broyden_inverse_update(h, a, u, tau: float,
                           skip_tol: float = DEFAULT_SKIP_TOL,
                           gu=None) -> SymMatrix:
    """Inverse counterpart of :func:`broyden_update` for ``h = g^{-1}``.

    ``gu`` (the primal action ``G u``) may be supplied by callers that
    maintain the primal matrix; otherwise it is recovered by solving
    ``h x = u``, which is the slow reference path.
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    hm, am, v = _pair(h, a, u)
    gu_vec = np.linalg.solve(hm, v) if gu is None else np.asarray(gu, dtype=np.float64)
    au = am @ v
    ru = gu_vec - au
    scale = float(np.linalg.norm(ru)) * float(np.linalg.norm(v))
    out, _ = broyden_inverse_kernel(hm, v, au, gu_vec, tau, scale, skip_tol)
    return SymMatrix(out)


def bfgs_factor_update(l, a, u, u_tilde) -> np.ndarray:
    """Update the square factor ``l`` (``l.T @ l = g^{-1}``) for a BFGS step.

    Requires ``u = l.T @ u_tilde``; the result satisfies
    ``l_new.T @ l_new = bfgs_update(g, a, u)^{-1}``.
    """
    lm = np.asarray(l, dtype=np.float64)
    am = as_sym_array(a)
    v = _check_direction(u, am.shape[0])
    return bfgs_factor_kernel(lm, v, am @ v, u_tilde)


def correct(state: ApproxState, m_const: float, r: float) -> ApproxState:
    """Inflate the approximation by (1 + m_const * r).

    Scales ``g`` up, ``h`` down by the reciprocal, and ``l`` by the inverse
    square root, preserving the inverse and factor couplings exactly.
    """
    if m_const < 0.0 or r < 0.0:
        raise ValueError("m_const and r must be nonnegative")
    factor = 1.0 + m_const * r
    if factor == 1.0:
        return replace(state)
    return ApproxState(
        g=state.g * factor,
        h=state.h / factor,
        l=None if state.l is None else state.l / np.sqrt(factor),
    )
