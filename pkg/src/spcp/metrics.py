"""Parameter heuristics and error metrics for the experiment harness."""

import numpy as np

from .linalg import check_matrix, frobenius_norm, nuclear_norm, svd_full

__all__ = [
    "derive_parameters",
    "default_lambda_sum",
    "epsilon_from_spectrum",
    "span_projection_error",
    "relative_pair_error",
]


def derive_parameters(L_ref, S_ref, A, lambda_sum=None, lam_l=None, lam_s=None):
    """Formulation parameters implied by a reference decomposition.

    Given an oracle (or high-accuracy) split ``A ~ L_ref + S_ref``:

    * ``lambda_max = ||L_ref||_* / ||S_ref||_1``,
    * ``eps = ||L_ref + S_ref - A||_F`` (residual-norm budget),
    * ``tau_max = max(||L_ref||_*, lambda_max * ||S_ref||_1)``,
    * ``tau_sum = ||L_ref||_* + lambda_sum * ||S_ref||_1`` when a sum
      weight is available. A Lagrangian pair (lam_l, lam_s) implies
      ``lambda_sum = lam_s / lam_l``.

    Returns a dict with the derivable keys.
    """
    L_ref = check_matrix(L_ref, "L_ref")
    S_ref = check_matrix(S_ref, "S_ref")
    A = check_matrix(A, "A")
    l_nuc = nuclear_norm(L_ref)
    s_l1 = float(np.sum(np.abs(S_ref)))
    if s_l1 == 0.0:
        raise ValueError("lambda_max is undefined for a zero sparse reference")
    lambda_max = l_nuc / s_l1
    out = {
        "lambda_max": lambda_max,
        "eps": frobenius_norm(L_ref + S_ref - A),
        "tau_max": max(l_nuc, lambda_max * s_l1),
    }
    if lambda_sum is None and lam_l is not None and lam_s is not None:
        lambda_sum = lam_s / lam_l
    if lambda_sum is not None:
        out["lambda_sum"] = lambda_sum
        out["tau_sum"] = l_nuc + lambda_sum * s_l1
    return out


def default_lambda_sum(m, n):
    """The standard sum-formulation weight ``1 / sqrt(max(m, n))``."""
    if m < 1 or n < 1:
        raise ValueError("dimensions must be positive")
    return 1.0 / np.sqrt(max(m, n))


def epsilon_from_spectrum(A, keep):
    """Residual budget from the spectral tail:
    ``sqrt(sum of sigma_i^2 for i > keep)``."""
    A = check_matrix(A, "A")
    s = np.linalg.svd(A, compute_uv=False)
    if keep > s.size:
        raise ValueError("keep exceeds the number of singular values")
    return float(np.sqrt(np.sum(s[int(keep):] ** 2)))


def span_projection_error(L, y):
    """Distance from ``y`` to the column span of ``L``."""
    L = check_matrix(L, "L")
    y = np.asarray(y, dtype=float).ravel()
    if y.size != L.shape[0]:
        raise ValueError("vector length does not match the matrix rows")
    f = svd_full(L)
    if f.sigma.size == 0 or f.sigma[0] == 0.0:
        return float(np.linalg.norm(y))
    cols = f.sigma > 1e-10 * f.sigma[0]
    Q = f.U[:, cols]
    r = y - Q @ (Q.T @ y)
    return float(np.linalg.norm(r))


def relative_pair_error(pair, reference, mode="sum"):
    """Error of (L, S) against a reference pair.

    mode 'sum' is ``||L-L*||_F/||L*||_F + ||S-S*||_F/||S*||_F``; mode
    'joint' is the single ratio of stacked Frobenius norms.
    """
    L, S = pair
    L_ref, S_ref = reference
    dl = frobenius_norm(np.asarray(L) - L_ref)
    ds = frobenius_norm(np.asarray(S) - S_ref)
    nl = frobenius_norm(L_ref)
    ns = frobenius_norm(S_ref)
    if mode == "sum":
        if nl == 0.0 or ns == 0.0:
            raise ValueError("sum-of-ratios error needs nonzero reference blocks")
        return dl / nl + ds / ns
    if mode == "joint":
        denom = np.sqrt(nl ** 2 + ns ** 2)
        if denom == 0.0:
            raise ValueError("joint error needs a nonzero reference")
        return float(np.sqrt(dl ** 2 + ds ** 2) / denom)
    raise ValueError(f"unknown error mode {mode!r}")
