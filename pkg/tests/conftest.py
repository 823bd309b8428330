import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_sparse(rng, m, n, nnz, scale=5.0):
    S = np.zeros((m, n))
    idx = rng.choice(m * n, size=nnz, replace=False)
    S.flat[idx] = rng.uniform(-scale, scale, size=nnz)
    return S
