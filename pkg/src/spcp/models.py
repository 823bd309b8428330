"""Composite-model builders for the RPCA formulations.

Every formulation shares the primal variable ``x = (vec(L), vec(S))``,
the regularizer ``psi0`` on the pair, and a single operator term through
``L + S``; they differ in the misfit handle psi1:

* classic: indicator of {0} (exact decomposition),
* sum: indicator of the Frobenius ball of radius eps,
* linf: indicator of the entrywise ball (quantization-level fitting),
* lag: the least-squares penalty itself.
"""

import numpy as np

from .dualsmooth import CompositeModel
from .handles import (
    L2BallIndicator,
    LinfBallIndicator,
    PairSumGauge,
    SquaredL2,
    ZeroSetIndicator,
)
from .linalg import check_matrix, frobenius_norm
from .operators import op_sum_identity

__all__ = ["rpca_parts", "rpca_model", "default_mu"]


def rpca_parts(formulation, A, lam=None, eps=None, bound=0.5,
               lam_l=None, lam_s=None, nonneg=False):
    """(psi0, psi1, op, offset) for a pair-space RPCA formulation."""
    A = check_matrix(A, "A")
    m, n = A.shape
    op = op_sum_identity(m, n)
    b = A.ravel().copy()

    if formulation == "lag":
        if lam_l is None or lam_s is None:
            raise ValueError("the Lagrangian formulation needs lam_l and lam_s")
        psi0 = PairSumGauge((m, n), lam=lam_s / lam_l, weight=lam_l, nonneg=nonneg)
        psi1 = SquaredL2(1.0)
        return psi0, psi1, op, b

    if lam is None:
        raise ValueError(f"formulation {formulation!r} needs lam")
    psi0 = PairSumGauge((m, n), lam=lam, nonneg=nonneg)
    if formulation == "classic":
        psi1 = ZeroSetIndicator()
    elif formulation == "sum":
        if eps is None:
            raise ValueError("the sum formulation needs eps")
        psi1 = L2BallIndicator(eps)
    elif formulation == "linf":
        psi1 = LinfBallIndicator(bound)
    else:
        raise ValueError(f"unknown composite formulation {formulation!r}")
    return psi0, psi1, op, b


def rpca_model(formulation, A, rescale=True, **kwargs):
    psi0, psi1, op, b = rpca_parts(formulation, A, **kwargs)
    return CompositeModel(psi0, [(psi1, op, b)], dim=op.dim_in, rescale=rescale)


def default_mu(A):
    """Smoothing weight heuristic: 0.1 * ||A||_F / sqrt(m * n)."""
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    return 0.1 * frobenius_norm(A) / np.sqrt(m * n)
