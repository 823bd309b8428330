"""Proximity operators and projections.

Soft/singular-value thresholding, projections onto the l1, weighted-l1
and nuclear-norm balls, the joint (L, S) projections for the sum and max
regularizers, and the Moreau-identity helpers that derive conjugate
proximity operators.
"""

import numpy as np

from .linalg import check_matrix, svd_full

__all__ = [
    "soft_threshold",
    "soft_threshold_nonneg",
    "svt",
    "proj_l1_ball",
    "proj_l1_ball_nonneg",
    "proj_weighted_l1_ball",
    "proj_nuclear_ball",
    "proj_sum_gauge",
    "proj_max_gauge",
    "moreau_conjugate_prox",
    "reflected_prox",
]


def soft_threshold(x, t):
    """Entrywise shrinkage ``sign(x) * max(|x| - t, 0)``; prox of t*||.||_1."""
    if t <= 0:
        raise ValueError("threshold must be positive")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def soft_threshold_nonneg(x, t):
    """Prox of t*||.||_1 restricted to the non-negative orthant."""
    if t <= 0:
        raise ValueError("threshold must be positive")
    x = np.asarray(x, dtype=float)
    return np.maximum(x - t, 0.0)


def svt(M, t, factors=None):
    """Singular value thresholding: prox of t times the nuclear norm.

    Parameters
    ----------
    M : array_like, shape (m, n)
    t : float, positive threshold
    factors : SvdFactors, optional
        Precomputed SVD of M (skips the decomposition).
    """
    if t <= 0:
        raise ValueError("threshold must be positive")
    if factors is None:
        factors = svd_full(M)
    s = np.maximum(factors.sigma - t, 0.0)
    return (factors.U * s) @ factors.V.T


def proj_l1_ball(x, tau):
    """Euclidean projection onto ``{u : ||u||_1 <= tau}``.

    Operates entrywise on arrays of any shape; returns an array of the
    same shape. Feasible inputs are returned unchanged.
    """
    if tau < 0:
        raise ValueError("l1-ball radius must be nonnegative")
    x = np.asarray(x, dtype=float)
    if np.sum(np.abs(x)) <= tau:
        return x.copy()
    if tau == 0.0:
        return np.zeros_like(x)
    b = np.abs(x).ravel()
    order = np.argsort(b)[::-1]
    bs = b[order]
    csum = np.cumsum(bs) - tau
    theta_candidates = csum / np.arange(1, bs.size + 1)
    k = np.nonzero(theta_candidates < bs)[0][-1]
    theta = theta_candidates[k]
    return np.sign(x) * np.maximum(np.abs(x) - theta, 0.0)


def proj_l1_ball_nonneg(x, tau):
    """Projection onto the intersection of the l1 ball and the
    non-negative orthant. Negative coordinates are clamped to zero
    (their optimum under the cone constraint) before projecting."""
    x = np.asarray(x, dtype=float)
    return proj_l1_ball(np.maximum(x, 0.0), tau)


def proj_weighted_l1_ball(x, alpha, tau):
    """Projection onto the scaled l1 ball ``{u : sum_i alpha_i |u_i| <= tau}``.

    The solution has the form ``u_i = sign(x_i) * max(|x_i| - theta*alpha_i, 0)``
    with ``theta >= 0`` chosen so the constraint is tight for infeasible
    input. Runs in ``O(d log d)`` by sorting the breakpoints ``|x_i|/alpha_i``.

    Parameters
    ----------
    x : array_like
    alpha : array_like, strictly positive weights, same size as ``x``
    tau : float, nonnegative radius
    """
    if tau < 0:
        raise ValueError("ball radius must be nonnegative")
    x = np.asarray(x, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != x.shape:
        alpha = np.broadcast_to(alpha, x.shape).astype(float)
    if np.any(alpha <= 0):
        raise ValueError("weights must be strictly positive")
    b = np.abs(x)
    if float(np.sum(alpha * b)) <= tau:
        return x.copy()
    if tau == 0.0:
        return np.zeros_like(x)

    bf = b.ravel()
    af = alpha.ravel()
    order = np.argsort(bf / af, kind="stable")[::-1]
    bs = bf[order]
    as_ = af[order]
    csab = np.cumsum(as_ * bs)
    csa2 = np.cumsum(as_ * as_)
    # theta if the support were the first k sorted coordinates
    thetas = (csab - tau) / csa2
    ratios = bs / as_
    # first index whose coordinate would be zeroed out
    zero_idx = np.nonzero(thetas >= ratios)[0]
    theta = thetas[zero_idx[0] - 1] if zero_idx.size else thetas[-1]
    theta = max(theta, 0.0)
    return np.sign(x) * np.maximum(b - theta * alpha, 0.0)


def proj_nuclear_ball(M, tau, factors=None):
    """Projection onto ``{X : ||X||_* <= tau}`` via an l1 projection of
    the singular values."""
    if tau < 0:
        raise ValueError("nuclear-ball radius must be nonnegative")
    M = check_matrix(M)
    if factors is None:
        factors = svd_full(M)
    s = proj_l1_ball(factors.sigma, tau)
    return (factors.U * s) @ factors.V.T


def proj_sum_gauge(L, S, lam, tau, nonneg=False):
    """Joint projection of (L, S) onto ``{||L||_* + lam*||S||_1 <= tau}``.

    The singular values of L and the entries of S are projected together
    onto a scaled l1 ball (weights 1 on the spectrum, ``lam`` on S), and
    L is rebuilt in its original singular bases. With ``nonneg`` the S
    block is restricted to the non-negative orthant.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    if tau < 0:
        raise ValueError("ball radius must be nonnegative")
    L = check_matrix(L, "L")
    S = check_matrix(S, "S")
    factors = svd_full(L)
    s_vec = factors.sigma
    S_work = np.maximum(S, 0.0) if nonneg else S
    stacked = np.concatenate([s_vec, S_work.ravel()])
    weights = np.concatenate([np.ones(s_vec.size), np.full(S.size, lam)])
    proj = proj_weighted_l1_ball(stacked, weights, tau)
    s_hat = proj[: s_vec.size]
    S_hat = proj[s_vec.size:].reshape(S.shape)
    L_hat = (factors.U * s_hat) @ factors.V.T
    return L_hat, S_hat


def proj_max_gauge(L, S, lam, tau, nonneg=False):
    """Projection onto ``{max(||L||_*, lam*||S||_1) <= tau}``: the product
    of the nuclear ball of radius tau and the l1 ball of radius tau/lam."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    if tau < 0:
        raise ValueError("ball radius must be nonnegative")
    L_hat = proj_nuclear_ball(L, tau)
    if nonneg:
        S_hat = proj_l1_ball_nonneg(S, tau / lam)
    else:
        S_hat = proj_l1_ball(S, tau / lam)
    return L_hat, S_hat


def moreau_conjugate_prox(h, x, t=1.0):
    """Prox of the conjugate via the Moreau identity:
    ``prox_{t h*}(x) = x - t * prox_{h/t}(x/t)``."""
    if t <= 0:
        raise ValueError("prox scaling must be positive")
    x = np.asarray(x, dtype=float)
    return x - t * h.prox(x / t, 1.0 / t)


def reflected_prox(h, x):
    """Prox of the reflection ``x -> h(-x)``: equals ``-prox_h(-x)``."""
    x = np.asarray(x, dtype=float)
    return -h.prox(-x, 1.0)
