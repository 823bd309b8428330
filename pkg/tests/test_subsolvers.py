import numpy as np
import pytest

from conftest import random_sparse
from spcp.gauges import GaugeSpec, PenaltySpec, gauge_eval
from spcp.linalg import frobenius_norm, spectral_norm, svd_full
from spcp.prox import proj_l1_ball, soft_threshold, svt
from spcp.subsolvers import FlipProblem, IterState, LagProblem, solve_flip_qn, solve_flip_spg


def projected_gradient_reference(problem, tol=1e-12, max_iters=10 ** 6):
    """Plain projected gradient with constant step 1/Lipschitz."""
    A = problem.A
    L = np.zeros_like(A)
    S = np.zeros_like(A)
    lip = problem.grad_lipschitz
    for _ in range(max_iters):
        gl, gs, _ = problem.gradient(L, S)
        PL, PS = problem.project(L - gl / lip, S - gs / lip)
        step = np.sqrt(np.sum((L - PL) ** 2) + np.sum((S - PS) ** 2))
        L, S = PL, PS
        if step <= tol:
            break
    return L, S


def prox_gradient_lag_reference(problem, tol=1e-12, max_iters=10 ** 6):
    A = problem.A
    L = np.zeros_like(A)
    S = np.zeros_like(A)
    for _ in range(max_iters):
        R = L + S - A
        L_new = svt(L - R / 2, problem.lam_L / 2)
        S_new = soft_threshold(S - R / 2, problem.lam_S / 2)
        step = np.sqrt(np.sum((L - L_new) ** 2) + np.sum((S - S_new) ** 2))
        L, S = L_new, S_new
        if step <= tol:
            break
    return L, S


def test_spg_interior_optimum(rng):
    A = rng.standard_normal((5, 5))
    gauge = GaugeSpec("sum", 1.0)
    tau = gauge_eval(gauge, A, np.zeros_like(A)) + 10.0  # (A, 0) feasible
    problem = FlipProblem(gauge=gauge, tau=tau, penalty=PenaltySpec(), A=A)
    (L, S), trace = solve_flip_spg(problem, tol=1e-10, max_iters=5000)
    assert trace.converged
    assert problem.objective(L, S) <= 1e-12


def test_spg_zero_budget(rng):
    A = rng.standard_normal((4, 4))
    problem = FlipProblem(gauge=GaugeSpec("sum", 1.0), tau=0.0,
                          penalty=PenaltySpec(), A=A)
    (L, S), trace = solve_flip_spg(problem, tol=1e-10)
    assert np.array_equal(L, np.zeros_like(A))
    assert np.array_equal(S, np.zeros_like(A))
    assert problem.objective(L, S) == pytest.approx(0.5 * frobenius_norm(A) ** 2)


def test_spg_against_longrun_reference(rng):
    A = rng.standard_normal((6, 6))
    gauge = GaugeSpec("sum", 0.8)
    problem = FlipProblem(gauge=gauge, tau=1.5, penalty=PenaltySpec(), A=A)
    (L, S), trace = solve_flip_spg(problem, tol=1e-10, max_iters=100000)
    assert trace.converged
    Lr, Sr = projected_gradient_reference(problem)
    assert problem.objective(L, S) == pytest.approx(
        problem.objective(Lr, Sr), abs=1e-6)


def test_spg_iterates_stay_feasible(rng):
    A = rng.standard_normal((5, 5)) * 3
    gauge = GaugeSpec("sum", 0.6)
    tau = 2.0
    seen = []

    def watcher(pair):
        seen.append(gauge_eval(gauge, pair[0], pair[1]))
        return 0.0

    problem = FlipProblem(gauge=gauge, tau=tau, penalty=PenaltySpec(), A=A)
    solve_flip_spg(problem, tol=1e-8, max_iters=500, error_fn=watcher)
    assert seen
    assert max(seen) <= tau + 1e-8


def test_spg_flags_budget_exhaustion(rng):
    A = rng.standard_normal((6, 6)) * 5
    problem = FlipProblem(gauge=GaugeSpec("sum", 1.0), tau=3.0,
                          penalty=PenaltySpec(), A=A)
    _, trace = solve_flip_spg(problem, tol=1e-14, max_iters=1)
    assert not trace.converged
    assert "budget" in trace.message


def test_qn_fixed_point(rng):
    # start at the solution with zero block differences: no movement
    A = rng.standard_normal((4, 4)) * 0.01
    problem = LagProblem(lam_L=10.0, lam_S=10.0, A=A)  # solution is (0, 0)
    state = IterState.zeros(A.shape)
    (L, S), trace = solve_flip_qn(problem, tol=1e-10, max_iters=50, state=state)
    assert trace.converged
    assert np.array_equal(L, np.zeros_like(A))
    assert np.array_equal(S, np.zeros_like(A))


def test_qn_lag_full_shrinkage(rng):
    A = rng.standard_normal((5, 5))
    problem = LagProblem(lam_L=spectral_norm(A) * 1.1,
                         lam_S=np.abs(A).max() * 1.1, A=A)
    (L, S), trace = solve_flip_qn(problem, tol=1e-12, max_iters=200)
    assert trace.converged
    assert frobenius_norm(L) <= 1e-12
    assert frobenius_norm(S) <= 1e-12


def test_qn_lag_against_longrun_reference(rng):
    A = rng.standard_normal((8, 8))
    problem = LagProblem(lam_L=0.25 * spectral_norm(A),
                         lam_S=0.1 * np.abs(A).max(), A=A)
    (L, S), trace = solve_flip_qn(problem, tol=1e-12, max_iters=100000)
    assert trace.converged
    Lr, Sr = prox_gradient_lag_reference(problem)
    assert problem.objective(L, S) == pytest.approx(
        problem.objective(Lr, Sr), abs=1e-8)


def test_qn_rejects_sum_gauge(rng):
    problem = FlipProblem(gauge=GaugeSpec("sum", 1.0), tau=1.0,
                          penalty=PenaltySpec(), A=np.eye(3))
    with pytest.raises(ValueError):
        solve_flip_qn(problem)


def test_qn_rejects_huber(rng):
    problem = FlipProblem(gauge=GaugeSpec("max", 1.0), tau=1.0,
                          penalty=PenaltySpec("huber"), A=np.eye(3))
    with pytest.raises(ValueError):
        solve_flip_qn(problem)


def test_qn_halfstep_never_increases_surrogate(rng):
    # the L half-step minimizes the frozen-cross-term quadratic model
    A = rng.standard_normal((5, 5))
    tau = 2.0
    gauge = GaugeSpec("max", 1.0)
    problem = FlipProblem(gauge=gauge, tau=tau, penalty=PenaltySpec(), A=A)
    c = 1.25
    L, S = problem.project(rng.standard_normal((5, 5)),
                           rng.standard_normal((5, 5)))
    S_prev = problem.project(rng.standard_normal((5, 5)),
                             rng.standard_normal((5, 5)))[1]
    R = L + S - A
    D_S = S - S_prev

    def surrogate_L(Lc):
        dL = Lc - L
        return (np.sum(R * dL) + 0.5 * np.sum(dL * dL)
                + 0.5 * c * np.sum(dL * D_S))

    from spcp.prox import proj_nuclear_ball
    L_new = proj_nuclear_ball(L - R - 0.5 * c * D_S, tau)
    assert surrogate_L(L_new) <= surrogate_L(L) + 1e-12


def test_spg_and_qn_agree_on_flip_max(rng):
    # same fixed point, different paths, 20 random instances
    for trial in range(20):
        gen = np.random.default_rng(trial)
        A = gen.standard_normal((6, 6))
        gauge = GaugeSpec("max", 0.7 + 0.1 * (trial % 3))
        tau = 0.5 * gauge_eval(gauge, A / 2, A / 2)
        problem = FlipProblem(gauge=gauge, tau=tau, penalty=PenaltySpec(), A=A)
        (L1, S1), t1 = solve_flip_spg(problem, tol=1e-11, max_iters=100000)
        (L2, S2), t2 = solve_flip_qn(problem, tol=1e-11, max_iters=100000)
        assert t1.converged and t2.converged
        scale = max(1.0, frobenius_norm(A))
        dist = np.sqrt(frobenius_norm(L1 - L2) ** 2 + frobenius_norm(S1 - S2) ** 2)
        assert dist <= 1e-5 * scale


def test_warm_start_reuses_state(rng):
    A = rng.standard_normal((6, 6))
    gauge = GaugeSpec("max", 1.0)
    problem = FlipProblem(gauge=gauge, tau=1.0, penalty=PenaltySpec(), A=A)
    state = IterState.zeros(A.shape)
    solve_flip_qn(problem, tol=1e-10, state=state, max_iters=10000)
    cold_iters = state.iters
    # re-solve a nearby problem from the warm state
    problem2 = FlipProblem(gauge=gauge, tau=1.05, penalty=PenaltySpec(), A=A)
    before = state.iters
    solve_flip_qn(problem2, tol=1e-10, state=state, max_iters=10000)
    warm_iters = state.iters - before
    assert warm_iters <= cold_iters


def test_time_limit_flags(rng):
    A = rng.standard_normal((10, 10)) * 4
    problem = LagProblem(0.01, 0.001, A)
    _, trace = solve_flip_qn(problem, tol=1e-16, max_iters=10 ** 7,
                             time_limit=0.05)
    assert not trace.converged
    assert "time limit" in trace.message
