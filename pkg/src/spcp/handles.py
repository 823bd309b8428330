"""Prox-capable function handles.

A :class:`ProxHandle` bundles a convex function with its proximity
operator. Conjugate proxes come from the Moreau identity by default and
are overridden with direct formulas where a closed form exists, so the
two routes can be cross-checked. Handles optionally expose

* ``conj_eval`` -- the Fenchel conjugate value (used for dual objectives),
* ``subgrad_select`` -- a subgradient at a point, chosen as close to a
  target vector as the subdifferential allows (used for optimality
  certificates),
* ``is_indicator`` / ``project`` -- set-indicator structure.
"""

import numpy as np

from .linalg import check_matrix, svd_full
from .prox import (
    moreau_conjugate_prox,
    proj_l1_ball,
    soft_threshold,
    soft_threshold_nonneg,
    svt,
)

__all__ = [
    "ProxHandle",
    "L1Norm",
    "NuclearNorm",
    "PairSumGauge",
    "ZeroFunction",
    "SquaredL2",
    "ZeroSetIndicator",
    "L2BallIndicator",
    "LinfBallIndicator",
    "L1BallIndicator",
]


class ProxHandle:
    """Base class; subclasses implement ``eval`` and ``prox``.

    ``prox(x, t)`` returns ``argmin_u t*f(u) + 0.5*||u - x||^2``.
    """

    is_indicator = False

    def eval(self, x):
        raise NotImplementedError

    def prox(self, x, t=1.0):
        raise NotImplementedError

    def conj_prox(self, x, t=1.0):
        """Prox of the conjugate; Moreau identity unless overridden."""
        return moreau_conjugate_prox(self, x, t)

    def conj_eval(self, v):
        """Fenchel conjugate value, when implemented."""
        raise NotImplementedError(f"{type(self).__name__} has no conjugate evaluation")

    def subgrad_select(self, u, target=None, feas_tol=0.0):
        """An element of the subdifferential at ``u`` near ``target``,
        or None when ``u`` is outside the domain (beyond ``feas_tol``)."""
        return None

    def snap(self, u, tol):
        """Zero out sub-``tol`` structure (entries, singular values) so
        subdifferentials regain their flexibility at sparse points.
        Identity for handles without such structure."""
        return np.asarray(u, dtype=float).copy()

    def project(self, u):
        if not self.is_indicator:
            raise ValueError("project() is only defined for indicator handles")
        return self.prox(u, 1.0)

    def shifted(self, b):
        """Handle for ``x -> f(x - b)``."""
        return ShiftedProx(self, b)

    def scaled_arg(self, s):
        """Handle for ``x -> f(s * x)``."""
        return ArgScaledProx(self, s)


def _flat(x):
    return np.asarray(x, dtype=float)


class L1Norm(ProxHandle):
    """``weight * ||x||_1`` with soft-threshold prox."""

    def __init__(self, weight=1.0):
        if weight <= 0:
            raise ValueError("weight must be positive")
        self.weight = float(weight)

    def eval(self, x):
        return self.weight * float(np.sum(np.abs(x)))

    def prox(self, x, t=1.0):
        return soft_threshold(_flat(x), t * self.weight)

    def conj_prox(self, x, t=1.0):
        # conjugate is the indicator of the weight-radius inf-norm ball
        return np.clip(_flat(x), -self.weight, self.weight)

    def conj_eval(self, v):
        v = _flat(v)
        if np.max(np.abs(v), initial=0.0) <= self.weight * (1 + 1e-12) + 1e-300:
            return 0.0
        return np.inf

    def subgrad_select(self, u, target=None, feas_tol=0.0):
        return _l1_subgrad(_flat(u), self.weight, target)


def _l1_subgrad(u, weight, target, zero_tol=1e-12):
    scale = max(np.max(np.abs(u), initial=0.0), 1.0)
    g = weight * np.sign(u)
    at_zero = np.abs(u) <= zero_tol * scale
    if np.any(at_zero):
        if target is None:
            fill = 0.0
        else:
            fill = np.clip(np.asarray(target, dtype=float)[at_zero], -weight, weight)
        g[at_zero] = fill
    return g


class NuclearNorm(ProxHandle):
    """``weight * ||X||_*`` on flattened (m, n) matrices."""

    def __init__(self, shape, weight=1.0):
        if weight <= 0:
            raise ValueError("weight must be positive")
        self.shape = tuple(shape)
        self.weight = float(weight)

    def _mat(self, x):
        return np.asarray(x, dtype=float).reshape(self.shape)

    def eval(self, x):
        s = np.linalg.svd(self._mat(x), compute_uv=False)
        return self.weight * float(np.sum(s))

    def prox(self, x, t=1.0):
        x = _flat(x)
        out = svt(self._mat(x), t * self.weight)
        return out.reshape(x.shape)

    def conj_prox(self, x, t=1.0):
        # conjugate is the indicator of the spectral ball of radius weight
        x = _flat(x)
        f = svd_full(self._mat(x))
        s = np.minimum(f.sigma, self.weight)
        return ((f.U * s) @ f.V.T).reshape(x.shape)

    def conj_eval(self, v):
        s = np.linalg.svd(self._mat(v), compute_uv=False)
        top = s[0] if s.size else 0.0
        return 0.0 if top <= self.weight * (1 + 1e-10) + 1e-300 else np.inf

    def subgrad_select(self, u, target=None, feas_tol=0.0):
        u = _flat(u)
        T = None if target is None else np.asarray(target, dtype=float).reshape(self.shape)
        g = _nuclear_subgrad(self._mat(u), self.weight, T)
        return g.reshape(u.shape)


def _nuclear_subgrad(M, weight, target, rank_tol=1e-10):
    f = svd_full(M)
    if f.sigma.size == 0:
        return np.zeros_like(M)
    cut = rank_tol * max(f.sigma[0], 1.0)
    r = int(np.count_nonzero(f.sigma > cut))
    U1 = f.U[:, :r]
    V1 = f.V[:, :r]
    G = U1 @ V1.T
    if target is not None and r < min(M.shape):
        # remaining freedom: add W with U1'W = 0, W V1 = 0, ||W||_2 <= 1;
        # pick the one nearest the target by projecting and clipping
        T = target / weight
        P = T - U1 @ (U1.T @ T)
        P = P - (P @ V1) @ V1.T
        fp = svd_full(P)
        s = np.minimum(fp.sigma, 1.0)
        G = G + (fp.U * s) @ fp.V.T
    return weight * G


class PairSumGauge(ProxHandle):
    """``weight * (||L||_* + lam * ||S||_1)`` on a flattened (L, S) pair.

    The prox is separable: singular value thresholding on the L block and
    soft thresholding on the S block. With ``nonneg`` the S block is
    additionally constrained to the non-negative orthant.
    """

    def __init__(self, shape, lam, weight=1.0, nonneg=False):
        if lam <= 0 or weight <= 0:
            raise ValueError("lam and weight must be positive")
        self.shape = tuple(shape)
        self.lam = float(lam)
        self.weight = float(weight)
        self.nonneg = bool(nonneg)

    @property
    def _mn(self):
        return self.shape[0] * self.shape[1]

    def split(self, x):
        x = _flat(x)
        return x[: self._mn].reshape(self.shape), x[self._mn:].reshape(self.shape)

    def eval(self, x):
        L, S = self.split(x)
        if self.nonneg and np.min(S, initial=0.0) < -1e-12:
            return np.inf
        s = np.linalg.svd(L, compute_uv=False)
        return self.weight * (float(np.sum(s)) + self.lam * float(np.sum(np.abs(S))))

    def prox(self, x, t=1.0):
        L, S = self.split(x)
        L_new = svt(L, t * self.weight)
        if self.nonneg:
            S_new = soft_threshold_nonneg(S, t * self.weight * self.lam)
        else:
            S_new = soft_threshold(S, t * self.weight * self.lam)
        return np.concatenate([L_new.ravel(), S_new.ravel()])

    def conj_eval(self, v):
        Z1, Z2 = self.split(v)
        s = np.linalg.svd(Z1, compute_uv=False)
        top = s[0] if s.size else 0.0
        # with the orthant constraint only the positive part of Z2 matters
        z2max = np.max(np.maximum(Z2, 0.0) if self.nonneg else np.abs(Z2), initial=0.0)
        polar = max(top, z2max / self.lam)
        return 0.0 if polar <= self.weight * (1 + 1e-10) + 1e-300 else np.inf

    def subgrad_select(self, u, target=None, feas_tol=0.0):
        L, S = self.split(u)
        if self.nonneg and np.min(S, initial=0.0) < -max(feas_tol, 1e-12):
            return None
        TL = TS = None
        if target is not None:
            TL, TS = self.split(target)
        gL = _nuclear_subgrad(L, self.weight, TL)
        gS = _l1_subgrad(S, self.weight * self.lam, TS)
        if self.nonneg:
            # orthant normal cone widens the subdifferential at S_ij = 0
            # from [-w*lam, w*lam] to (-inf, w*lam]
            scale = max(np.max(np.abs(S), initial=0.0), 1.0)
            at_zero = np.abs(S) <= 1e-12 * scale
            if target is not None:
                gS[at_zero] = np.minimum(TS[at_zero], self.weight * self.lam)
        return np.concatenate([gL.ravel(), gS.ravel()])


class ZeroFunction(ProxHandle):
    """The zero function; prox is the identity."""

    def eval(self, x):
        return 0.0

    def prox(self, x, t=1.0):
        return _flat(x).copy()

    def conj_prox(self, x, t=1.0):
        # conjugate is the indicator of {0}
        return np.zeros_like(_flat(x))

    def conj_eval(self, v):
        v = _flat(v)
        return 0.0 if np.max(np.abs(v), initial=0.0) <= 1e-300 else np.inf

    def subgrad_select(self, u, target=None, feas_tol=0.0):
        return np.zeros_like(_flat(u))


class SquaredL2(ProxHandle):
    """``(weight / 2) * ||x||^2``."""

    def __init__(self, weight=1.0):
        if weight <= 0:
            raise ValueError("weight must be positive")
        self.weight = float(weight)

    def eval(self, x):
        x = _flat(x)
        return 0.5 * self.weight * float(np.dot(x.ravel(), x.ravel()))

    def prox(self, x, t=1.0):
        return _flat(x) / (1.0 + t * self.weight)

    def conj_prox(self, x, t=1.0):
        # conjugate is ||v||^2 / (2 weight)
        return _flat(x) / (1.0 + t / self.weight)

    def conj_eval(self, v):
        v = _flat(v)
        return 0.5 / self.weight * float(np.dot(v.ravel(), v.ravel()))

    def subgrad_select(self, u, target=None, feas_tol=0.0):
        return self.weight * _flat(u)


class ZeroSetIndicator(ProxHandle):
    """Indicator of {0}; prox maps everything to zero, conjugate prox is
    the identity."""

    is_indicator = True

    def eval(self, x):
        x = _flat(x)
        return 0.0 if np.max(np.abs(x), initial=0.0) <= 1e-300 else np.inf

    def prox(self, x, t=1.0):
        return np.zeros_like(_flat(x))

    def conj_prox(self, x, t=1.0):
        return _flat(x).copy()

    def conj_eval(self, v):
        return 0.0

    def subgrad_select(self, u, target=None, feas_tol=0.0):
        u = _flat(u)
        if np.linalg.norm(u.ravel()) > feas_tol:
            return None
        # normal cone at the only feasible point is the whole space
        if target is None:
            return np.zeros_like(u)
        return np.asarray(target, dtype=float).copy()


class L2BallIndicator(ProxHandle):
    """Indicator of ``{x : ||x||_2 <= radius}`` (Frobenius ball for
    matrix-shaped inputs)."""

    is_indicator = True

    def __init__(self, radius):
        if radius < 0:
            raise ValueError("radius must be nonnegative")
        self.radius = float(radius)

    def eval(self, x):
        nrm = np.linalg.norm(_flat(x).ravel())
        return 0.0 if nrm <= self.radius * (1 + 1e-12) + 1e-300 else np.inf

    def prox(self, x, t=1.0):
        x = _flat(x)
        nrm = np.linalg.norm(x.ravel())
        if nrm <= self.radius:
            return x.copy()
        if nrm == 0.0:
            return x.copy()
        return x * (self.radius / nrm)

    def conj_prox(self, x, t=1.0):
        # conjugate is radius * ||.||_2, whose prox shrinks toward zero
        x = _flat(x)
        nrm = np.linalg.norm(x.ravel())
        if nrm == 0.0:
            return x.copy()
        return x * max(0.0, 1.0 - t * self.radius / nrm)

    def conj_eval(self, v):
        return self.radius * float(np.linalg.norm(_flat(v).ravel()))

    def subgrad_select(self, u, target=None, feas_tol=0.0):
        u = _flat(u)
        nrm = np.linalg.norm(u.ravel())
        if nrm > self.radius + feas_tol:
            return None
        boundary_band = max(feas_tol, 1e-9 * max(self.radius, 1.0))
        if nrm < self.radius - boundary_band or nrm == 0.0:
            return np.zeros_like(u)
        # normal cone at the boundary is the outward ray along u
        if target is None:
            return np.zeros_like(u)
        coef = max(0.0, float(np.dot(np.ravel(target), u.ravel())) / (nrm * nrm))
        return coef * u


class LinfBallIndicator(ProxHandle):
    """Indicator of ``{x : ||x||_inf <= radius}``; prox clips entrywise."""

    is_indicator = True

    def __init__(self, radius):
        if radius < 0:
            raise ValueError("radius must be nonnegative")
        self.radius = float(radius)

    def eval(self, x):
        big = np.max(np.abs(_flat(x)), initial=0.0)
        return 0.0 if big <= self.radius * (1 + 1e-12) + 1e-300 else np.inf

    def prox(self, x, t=1.0):
        return np.clip(_flat(x), -self.radius, self.radius)

    def conj_prox(self, x, t=1.0):
        # conjugate is radius * ||.||_1
        return soft_threshold(_flat(x), t * self.radius)

    def conj_eval(self, v):
        return self.radius * float(np.sum(np.abs(v)))

    def subgrad_select(self, u, target=None, feas_tol=0.0):
        u = _flat(u)
        if np.max(np.abs(u), initial=0.0) > self.radius + feas_tol:
            return None
        g = np.zeros_like(u)
        if target is None:
            return g
        band = max(feas_tol, 1e-9 * max(self.radius, 1.0))
        at_bound = np.abs(u) >= self.radius - band
        t = np.asarray(target, dtype=float)
        g[at_bound] = np.sign(u[at_bound]) * np.maximum(
            0.0, t[at_bound] * np.sign(u[at_bound])
        )
        return g


class L1BallIndicator(ProxHandle):
    """Indicator of ``{x : ||x||_1 <= radius}``."""

    is_indicator = True

    def __init__(self, radius):
        if radius < 0:
            raise ValueError("radius must be nonnegative")
        self.radius = float(radius)

    def eval(self, x):
        total = float(np.sum(np.abs(x)))
        return 0.0 if total <= self.radius * (1 + 1e-12) + 1e-300 else np.inf

    def prox(self, x, t=1.0):
        return proj_l1_ball(_flat(x), self.radius)

    def conj_eval(self, v):
        return self.radius * float(np.max(np.abs(v), initial=0.0))


class ShiftedProx(ProxHandle):
    """``x -> f(x - b)`` for an inner handle ``f``."""

    def __init__(self, inner, b):
        self.inner = inner
        self.b = np.asarray(b, dtype=float)

    @property
    def is_indicator(self):
        return self.inner.is_indicator

    def eval(self, x):
        return self.inner.eval(_flat(x) - self.b)

    def prox(self, x, t=1.0):
        return self.b + self.inner.prox(_flat(x) - self.b, t)

    def conj_prox(self, x, t=1.0):
        # (f(.-b))* = f* + <., b>
        return self.inner.conj_prox(_flat(x) - t * self.b, t)

    def conj_eval(self, v):
        v = _flat(v)
        return self.inner.conj_eval(v) + float(np.dot(v.ravel(), self.b.ravel()))

    def subgrad_select(self, u, target=None, feas_tol=0.0):
        return self.inner.subgrad_select(_flat(u) - self.b, target, feas_tol)


class ArgScaledProx(ProxHandle):
    """``x -> f(s * x)`` for an inner handle ``f`` and scalar ``s != 0``."""

    def __init__(self, inner, s):
        if s == 0:
            raise ValueError("argument scaling must be nonzero")
        self.inner = inner
        self.s = float(s)

    @property
    def is_indicator(self):
        return self.inner.is_indicator

    def eval(self, x):
        return self.inner.eval(self.s * _flat(x))

    def prox(self, x, t=1.0):
        s = self.s
        return self.inner.prox(s * _flat(x), t * s * s) / s

    def conj_prox(self, x, t=1.0):
        # (f(s.))*(v) = f*(v/s)
        s = self.s
        return s * self.inner.conj_prox(_flat(x) / s, t / (s * s))

    def conj_eval(self, v):
        return self.inner.conj_eval(_flat(v) / self.s)

    def subgrad_select(self, u, target=None, feas_tol=0.0):
        s = self.s
        t_inner = None if target is None else np.asarray(target, dtype=float) / s
        g = self.inner.subgrad_select(s * _flat(u), t_inner, feas_tol)
        return None if g is None else s * g
