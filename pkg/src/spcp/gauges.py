"""Regularizers on (L, S) pairs: the sum and max combiners, their polar
gauges, smooth misfit penalties, and the value-function derivative used
by the level-set driver."""

from dataclasses import dataclass

import numpy as np

from .linalg import check_matrix, nuclear_norm, spectral_norm
from .operators import pair_to_vec, vec_to_pair
from .prox import proj_max_gauge, proj_sum_gauge

__all__ = [
    "GaugeSpec",
    "PenaltySpec",
    "gauge_eval",
    "gauge_polar",
    "value_fn_derivative",
]


@dataclass(frozen=True)
class GaugeSpec:
    """Regularizer descriptor.

    combiner 'sum' is ``||L||_* + lam*||S||_1``; combiner 'max' is
    ``max(||L||_*, lam*||S||_1)``. With ``nonneg`` the S block is further
    restricted to the non-negative orthant.
    """

    combiner: str
    lam: float
    nonneg: bool = False

    def __post_init__(self):
        if self.combiner not in ("sum", "max"):
            raise ValueError(f"unknown combiner {self.combiner!r}")
        if self.lam <= 0:
            raise ValueError("lam must be positive")

    def evaluate(self, L, S):
        return gauge_eval(self, L, S)

    def polar(self, Z1, Z2):
        return gauge_polar(self, Z1, Z2)

    def project(self, L, S, tau):
        if self.combiner == "sum":
            return proj_sum_gauge(L, S, self.lam, tau, nonneg=self.nonneg)
        return proj_max_gauge(L, S, self.lam, tau, nonneg=self.nonneg)


def gauge_eval(spec, L, S):
    """Value of the gauge at (L, S); +inf when a non-negativity
    constraint is violated beyond 1e-12."""
    S = np.asarray(S, dtype=float)
    if spec.nonneg and S.size and float(np.min(S)) < -1e-12:
        return np.inf
    ln = nuclear_norm(L)
    sn = spec.lam * float(np.sum(np.abs(S)))
    return ln + sn if spec.combiner == "sum" else max(ln, sn)


def gauge_polar(spec, Z1, Z2):
    """Polar gauge at (Z1, Z2).

    sum combiner: ``max(||Z1||_2, ||Z2||_inf / lam)``;
    max combiner: ``||Z1||_2 + ||Z2||_inf / lam``.
    With ``nonneg``, only the positive part of Z2 enters the inf-norm.
    """
    Z2 = np.asarray(Z2, dtype=float)
    if spec.nonneg:
        z2 = float(np.max(np.maximum(Z2, 0.0), initial=0.0))
    else:
        z2 = float(np.max(np.abs(Z2), initial=0.0))
    spec_norm = spectral_norm(Z1)
    if spec.combiner == "sum":
        return max(spec_norm, z2 / spec.lam)
    return spec_norm + z2 / spec.lam


@dataclass(frozen=True)
class PenaltySpec:
    """Smooth convex misfit penalty on the residual matrix.

    'least_squares' is ``0.5 * ||R||_F^2``; 'huber' applies the Huber
    function entrywise with transition at ``delta``. Both have
    1-Lipschitz gradients.
    """

    kind: str = "least_squares"
    delta: float = 1.0

    def __post_init__(self):
        if self.kind not in ("least_squares", "huber"):
            raise ValueError(f"unknown penalty {self.kind!r}")
        if self.delta <= 0:
            raise ValueError("huber delta must be positive")

    @property
    def lipschitz(self):
        return 1.0

    def value(self, R):
        R = np.asarray(R, dtype=float)
        if self.kind == "least_squares":
            return 0.5 * float(np.sum(R * R))
        a = np.abs(R)
        quad = a <= self.delta
        out = np.where(quad, 0.5 * R * R, self.delta * a - 0.5 * self.delta ** 2)
        return float(np.sum(out))

    def grad(self, R):
        R = np.asarray(R, dtype=float)
        if self.kind == "least_squares":
            return R.copy()
        return np.clip(R, -self.delta, self.delta)

    def target_from_residual_norm(self, eps_norm):
        """Penalty value corresponding to a Frobenius residual budget."""
        if self.kind != "least_squares":
            raise ValueError(
                "residual-norm budgets only translate for the least-squares penalty"
            )
        return 0.5 * float(eps_norm) ** 2


def value_fn_derivative(spec, penalty, op, L, S, A):
    """Derivative of the value function v(tau) at an (approximate)
    minimizer (L, S) of the flipped problem.

    Evaluates ``-polar(adjoint-of-op applied to the penalty gradient at
    the residual)``. With the default operator (L, S) -> L + S this is
    ``-polar(R, R)`` for ``R = grad rho(L + S - A)``.
    """
    A = check_matrix(A, "A")
    if op is None:
        R = penalty.grad(np.asarray(L, dtype=float) + np.asarray(S, dtype=float) - A)
        return -gauge_polar(spec, R, R)
    out = op.apply(pair_to_vec(L, S)) - A.ravel()
    g = penalty.grad(out)
    Z1, Z2 = vec_to_pair(op.adjoint(g), *A.shape)
    return -gauge_polar(spec, Z1, Z2)
