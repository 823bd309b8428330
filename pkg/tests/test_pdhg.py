import numpy as np
import pytest

from conftest import random_sparse
from spcp.dualsmooth import proximal_point
from spcp.handles import SquaredL2
from spcp.linalg import frobenius_norm
from spcp.models import default_mu, rpca_model, rpca_parts
from spcp.operators import op_identity, vec_to_pair
from spcp.pdhg import solve_pdhg


def test_pdhg_strongly_convex_toy():
    # min 0.5 x^2 + 0.5 x^2 has the unique solution 0
    psi0 = SquaredL2(1.0)
    psi1 = SquaredL2(1.0)
    x, trace = solve_pdhg(psi0, psi1, op_identity(3), None, tol=1e-12,
                          max_iters=5000)
    assert trace.converged
    assert np.linalg.norm(x) <= 1e-8


def test_pdhg_objective_running_best_nonincreasing(rng):
    psi0 = SquaredL2(1.0)
    psi1 = SquaredL2(1.0)
    b = rng.standard_normal(4)
    _, trace = solve_pdhg(psi0, psi1, op_identity(4), b, tol=1e-12,
                          max_iters=2000)
    objs = trace.column("objective")
    best = np.minimum.accumulate(objs)
    # the final running best is the final objective: no late regressions
    assert objs[-1] <= best[0] + 1e-12
    assert objs[-1] == pytest.approx(best[-1])


def test_pdhg_step_constraint_validation():
    psi0 = SquaredL2(1.0)
    psi1 = SquaredL2(1.0)
    op = op_identity(2)
    with pytest.raises(ValueError):
        solve_pdhg(psi0, psi1, op, None, step_product=1.5)
    with pytest.raises(ValueError):
        solve_pdhg(psi0, psi1, op, None, step_ratio=-1.0)


def test_pdhg_matches_proximal_point_on_classic_rpca(rng):
    m = n = 20
    L0 = rng.standard_normal((m, 2)) @ rng.standard_normal((2, n))
    A = L0 + random_sparse(rng, m, n, 20)
    lam = 0.25
    x_pp, tr_pp = proximal_point(rpca_model("classic", A, lam=lam),
                                 default_mu(A), outer_tol=1e-8,
                                 max_outer=100, inner_max_iters=3000)
    assert tr_pp.converged
    psi0, psi1, op, b = rpca_parts("classic", A, lam=lam)
    x_pd, tr_pd = solve_pdhg(psi0, psi1, op, b, tol=1e-11, max_iters=100000)
    assert tr_pd.converged
    rel = np.linalg.norm(x_pp - x_pd) / max(np.linalg.norm(x_pd), 1.0)
    assert rel <= 1e-4


def test_pdhg_sum_spcp_feasible_at_convergence(rng):
    m = n = 12
    L0 = rng.standard_normal((m, 2)) @ rng.standard_normal((2, n))
    A = L0 + random_sparse(rng, m, n, 10) + 0.01 * rng.standard_normal((m, n))
    eps = 0.05 * frobenius_norm(A)
    psi0, psi1, op, b = rpca_parts("sum", A, lam=0.3, eps=eps)
    x, trace = solve_pdhg(psi0, psi1, op, b, tol=1e-11, max_iters=200000)
    assert trace.converged
    L, S = vec_to_pair(x, m, n)
    assert frobenius_norm(L + S - A) <= eps + 1e-6
