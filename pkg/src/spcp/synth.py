"""Synthetic test-problem generators. Deterministic under a fixed seed."""

import numpy as np

__all__ = ["synth_exponential", "synth_lowrank_sparse"]


def _haar_columns(rng, dim, k):
    # QR of a Gaussian block with the R-sign correction gives Haar columns
    G = rng.standard_normal((dim, k))
    Q, R = np.linalg.qr(G)
    return Q * np.sign(np.where(np.diag(R) == 0, 1.0, np.diag(R)))


def synth_exponential(m, n, rank, seed=None):
    """Low-rank matrix with Haar singular vectors plus exponential noise.

    Singular values are uniform with mean 0.1; every entry then receives
    exponential noise whose mean is one tenth of the median absolute
    entry of the noiseless matrix.
    """
    if rank > min(m, n):
        raise ValueError("rank exceeds min(m, n)")
    rng = np.random.default_rng(seed)
    if rank > 0:
        U = _haar_columns(rng, m, rank)
        V = _haar_columns(rng, n, rank)
        s = np.sort(rng.uniform(0.0, 0.2, rank))[::-1]
        A0 = (U * s) @ V.T
    else:
        A0 = np.zeros((m, n))
    med = float(np.median(np.abs(A0)))
    noise_mean = 0.1 * med if med > 0 else 0.1
    return A0 + rng.exponential(noise_mean, size=(m, n))


def synth_lowrank_sparse(m, n, rank, p, snr_db, seed=None):
    """Gaussian-factor low-rank plus uniformly placed sparse outliers.

    Parameters
    ----------
    m, n, rank : int
    p : int
        Number of sparse entries, placed uniformly at random with values
        uniform on [-100, 100].
    snr_db : float
        White-noise level relative to L0 + S0; ``inf`` means noiseless.

    Returns
    -------
    (A, L0, S0)
    """
    if rank > min(m, n):
        raise ValueError("rank exceeds min(m, n)")
    if p > m * n:
        raise ValueError("p exceeds the number of entries")
    rng = np.random.default_rng(seed)
    L0 = rng.standard_normal((m, rank)) @ rng.standard_normal((rank, n))
    S0 = np.zeros((m, n))
    if p > 0:
        idx = rng.choice(m * n, size=int(p), replace=False)
        S0.flat[idx] = rng.uniform(-100.0, 100.0, size=int(p))
    signal = L0 + S0
    if np.isinf(snr_db):
        Z0 = np.zeros((m, n))
    else:
        Z0 = rng.standard_normal((m, n))
        sig_power = float(np.sum(signal * signal))
        noise_power = float(np.sum(Z0 * Z0))
        target = sig_power / (10.0 ** (snr_db / 10.0))
        Z0 *= np.sqrt(target / noise_power) if noise_power > 0 else 0.0
    return signal + Z0, L0, S0
