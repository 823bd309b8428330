"""Dense matrix utilities: norms, full and randomized SVD."""

import numpy as np

__all__ = [
    "SvdFactors",
    "frobenius_norm",
    "nuclear_norm",
    "spectral_norm",
    "svd_full",
    "svd_randomized",
]


def check_matrix(M, name="matrix"):
    """Coerce to a 2-D float array and reject non-finite entries."""
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M.reshape(1, -1)
    if M.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {M.shape}")
    if not np.isfinite(M).all():
        raise ValueError(f"{name} contains non-finite entries")
    return M


class SvdFactors:
    """Thin SVD triple ``M ~ U @ diag(sigma) @ V.T``.

    ``U`` is m-by-k and ``V`` is n-by-k with orthonormal columns,
    ``sigma`` is length k, sorted nonincreasing.
    """

    __slots__ = ("U", "sigma", "V")

    def __init__(self, U, sigma, V):
        self.U = U
        self.sigma = sigma
        self.V = V

    @property
    def rank(self):
        if self.sigma.size == 0:
            return 0
        tol = 1e-12 * max(self.sigma[0], 1.0)
        return int(np.count_nonzero(self.sigma > tol))

    def reconstruct(self):
        return (self.U * self.sigma) @ self.V.T


def _fix_signs(U, V):
    # Make the first nonzero entry of each left singular vector nonnegative
    # so factorizations are comparable across runs.
    for j in range(U.shape[1]):
        col = U[:, j]
        nz = np.flatnonzero(col)
        if nz.size and col[nz[0]] < 0:
            U[:, j] = -col
            V[:, j] = -V[:, j]
    return U, V


def frobenius_norm(M):
    return float(np.sqrt(np.sum(np.square(np.asarray(M, dtype=float)))))


def svd_full(M):
    """Full thin SVD with deterministic sign convention.

    Parameters
    ----------
    M : array_like, shape (m, n)

    Returns
    -------
    SvdFactors
    """
    M = check_matrix(M)
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    U, V = _fix_signs(U, Vt.T)
    return SvdFactors(U, s, V)


def singular_values(M):
    M = check_matrix(M)
    return np.linalg.svd(M, compute_uv=False)


def nuclear_norm(M):
    return float(np.sum(singular_values(M)))


def spectral_norm(M):
    """Largest singular value, computed from the Gram matrix.

    Uses a symmetric eigendecomposition of the smaller of ``M M^T`` and
    ``M^T M`` so the route is independent of :func:`svd_full`.
    """
    M = check_matrix(M)
    m, n = M.shape
    gram = M @ M.T if m <= n else M.T @ M
    w = np.linalg.eigvalsh(gram)
    return float(np.sqrt(max(w[-1], 0.0)))


def svd_randomized(M, target_rank, oversample=10, power_iters=2, seed=None):
    """Randomized range-finder SVD returning the leading ``target_rank`` factors.

    Gaussian test matrix with ``oversample`` extra columns and
    ``power_iters`` subspace iterations (re-orthonormalized each pass).

    Parameters
    ----------
    M : array_like, shape (m, n)
    target_rank : int
        Number of leading factors to return; must not exceed ``min(m, n)``.
    oversample : int
        Extra sampling columns for the range finder.
    power_iters : int
        Subspace (power) iterations to sharpen the spectrum.
    seed : int or numpy Generator, optional

    Returns
    -------
    SvdFactors
        Exactly ``target_rank`` factors.
    """
    M = check_matrix(M)
    m, n = M.shape
    k = int(target_rank)
    if k < 1:
        raise ValueError("target_rank must be >= 1")
    if k > min(m, n):
        raise ValueError(f"target_rank {k} exceeds min(m, n) = {min(m, n)}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    p = min(n, k + int(oversample))

    Y = M @ rng.standard_normal((n, p))
    Q, _ = np.linalg.qr(Y)
    for _ in range(int(power_iters)):
        Z, _ = np.linalg.qr(M.T @ Q)
        Q, _ = np.linalg.qr(M @ Z)
    B = Q.T @ M
    Ub, s, Vt = np.linalg.svd(B, full_matrices=False)
    U = Q @ Ub
    U, V = _fix_signs(U[:, :k], Vt[:k].T)
    return SvdFactors(U, s[:k].copy(), V)
