import numpy as np
import pytest

from spcp.handles import (
    L1BallIndicator,
    L1Norm,
    L2BallIndicator,
    LinfBallIndicator,
    NuclearNorm,
    PairSumGauge,
    SquaredL2,
    ZeroFunction,
    ZeroSetIndicator,
)
from spcp.prox import moreau_conjugate_prox


def vector_handles():
    return [
        ("l1", L1Norm(0.8), 10),
        ("zero_fn", ZeroFunction(), 10),
        ("squared_l2", SquaredL2(1.7), 10),
        ("zero_set", ZeroSetIndicator(), 10),
        ("l2_ball", L2BallIndicator(1.3), 10),
        ("linf_ball", LinfBallIndicator(0.6), 10),
        ("l1_ball", L1BallIndicator(2.0), 10),
        ("nuclear", NuclearNorm((4, 3), 0.9), 12),
        ("pair_sum", PairSumGauge((3, 3), 0.7), 18),
    ]


@pytest.mark.parametrize("name,handle,dim", vector_handles())
def test_moreau_identity_cross_route(rng, name, handle, dim):
    # prox_f(x) + prox_{f*}(x) = x at t=1, with the conjugate prox taken
    # from the handle's own (possibly direct) implementation
    for _ in range(50):
        x = rng.standard_normal(dim) * 2.5
        recon = handle.prox(x, 1.0) + handle.conj_prox(x, 1.0)
        assert np.allclose(recon, x, atol=1e-12), name


@pytest.mark.parametrize("name,handle,dim", vector_handles())
def test_direct_conj_matches_moreau(rng, name, handle, dim):
    for t in (0.5, 1.0, 2.3):
        x = rng.standard_normal(dim) * 2
        assert np.allclose(handle.conj_prox(x, t),
                           moreau_conjugate_prox(handle, x, t),
                           atol=1e-11), (name, t)


@pytest.mark.parametrize("name,handle,dim", vector_handles())
def test_prox_is_firmly_nonexpansive(rng, name, handle, dim):
    for _ in range(25):
        x = rng.standard_normal(dim) * 2
        y = rng.standard_normal(dim) * 2
        px, py = handle.prox(x, 1.0), handle.prox(y, 1.0)
        assert (np.linalg.norm(px - py) ** 2
                + np.linalg.norm((x - px) - (y - py)) ** 2
                <= np.linalg.norm(x - y) ** 2 + 1e-10), name


@pytest.mark.parametrize("name,handle,dim", [
    ("l1", L1Norm(0.8), 10),
    ("squared_l2", SquaredL2(1.7), 10),
    ("l2_ball", L2BallIndicator(1.3), 10),
    ("linf_ball", LinfBallIndicator(0.6), 10),
    ("nuclear", NuclearNorm((4, 3), 0.9), 12),
    ("pair_sum", PairSumGauge((3, 3), 0.7), 18),
])
def test_subgradient_inequality(rng, name, handle, dim):
    # every selected subgradient satisfies f(y) >= f(u) + <g, y - u>
    for _ in range(20):
        u = rng.standard_normal(dim)
        if handle.is_indicator:
            u = handle.project(u)
        target = rng.standard_normal(dim)
        g = handle.subgrad_select(u, target=target, feas_tol=1e-9)
        assert g is not None, name
        fu = handle.eval(u)
        for _ in range(20):
            y = u + rng.standard_normal(dim) * rng.uniform(0.01, 2.0)
            fy = handle.eval(y)
            if np.isinf(fy):
                continue
            assert fy >= fu + float(np.dot(g, y - u)) - 1e-8, name


def test_subgrad_infeasible_returns_none(rng):
    h = L2BallIndicator(1.0)
    assert h.subgrad_select(np.full(4, 2.0), feas_tol=1e-9) is None
    z = ZeroSetIndicator()
    assert z.subgrad_select(np.ones(3), feas_tol=1e-9) is None


def test_fenchel_young(rng):
    handles = [L1Norm(0.8), SquaredL2(1.7), L2BallIndicator(1.3),
               LinfBallIndicator(0.6), ZeroSetIndicator()]
    for h in handles:
        for _ in range(30):
            x = rng.standard_normal(6)
            if h.is_indicator:
                x = h.project(x)
            v = rng.standard_normal(6)
            fx, fv = h.eval(x), h.conj_eval(v)
            if np.isinf(fx) or np.isinf(fv):
                continue
            assert fx + fv >= float(np.dot(x, v)) - 1e-9


def test_shifted_prox_identity(rng):
    base = L1Norm(1.2)
    b = rng.standard_normal(5)
    h = base.shifted(b)
    x = rng.standard_normal(5)
    # prox of f(.-b) equals b + prox_f(.-b)
    assert np.allclose(h.prox(x, 0.7), b + base.prox(x - b, 0.7), atol=1e-14)
    assert h.eval(x) == pytest.approx(base.eval(x - b))
    # conjugate gains a linear term
    v = rng.standard_normal(5)
    assert h.conj_eval(v) == pytest.approx(base.conj_eval(v) + float(v @ b))


def test_arg_scaled_prox_against_grid(rng):
    # g(x) = f(s x) with f = 0.8 |.|: grid-check the prox in 1-D
    s = 1.7
    h = L1Norm(0.8).scaled_arg(s)
    for xi in (-2.0, 0.3, 1.4):
        t = 0.6
        grid = np.arange(xi - 3, xi + 3, 1e-6)
        vals = t * 0.8 * np.abs(s * grid) + 0.5 * (grid - xi) ** 2
        expect = grid[np.argmin(vals)]
        got = h.prox(np.array([xi]), t)[0]
        assert abs(got - expect) <= 2e-6


def test_pair_sum_gauge_prox_blocks(rng):
    from spcp.prox import soft_threshold, svt
    h = PairSumGauge((3, 4), lam=0.6, weight=1.3)
    x = rng.standard_normal(24)
    out = h.prox(x, 0.9)
    L, S = x[:12].reshape(3, 4), x[12:].reshape(3, 4)
    assert np.allclose(out[:12].reshape(3, 4), svt(L, 0.9 * 1.3), atol=1e-12)
    assert np.allclose(out[12:].reshape(3, 4),
                       soft_threshold(S, 0.9 * 1.3 * 0.6), atol=1e-14)


def test_pair_sum_gauge_nonneg(rng):
    h = PairSumGauge((2, 2), lam=1.0, nonneg=True)
    x = np.concatenate([np.zeros(4), np.array([1.0, -1.0, 0.2, -0.2])])
    out = h.prox(x, 0.1)
    assert out[4:].min() >= 0.0
    assert np.isinf(h.eval(x))
