import numpy as np
import pytest

from conftest import random_sparse
from spcp.gauges import GaugeSpec, PenaltySpec, gauge_eval
from spcp.levelset import solve_levelset
from spcp.linalg import frobenius_norm


def test_trivial_when_target_above_zero_value(rng):
    A = rng.standard_normal((4, 4))
    eps = 0.5 * frobenius_norm(A) ** 2 + 1.0
    (L, S), trace = solve_levelset(GaugeSpec("sum", 1.0), PenaltySpec(), A, eps)
    assert trace.converged
    assert np.array_equal(L, np.zeros_like(A))
    assert np.array_equal(S, np.zeros_like(A))


def test_scalar_closed_form():
    # A = [2], sum gauge, lam = 1: v(tau) = 0.5 (2 - tau)^2, root of
    # v = 1/2 at tau* = 1
    A = np.array([[2.0]])
    (L, S), trace = solve_levelset(GaugeSpec("sum", 1.0), PenaltySpec(), A,
                                   0.5, tol=1e-8)
    assert trace.converged
    assert abs(L[0, 0]) + abs(S[0, 0]) == pytest.approx(1.0, abs=1e-6)
    assert 0.5 * (2.0 - (L[0, 0] + S[0, 0])) ** 2 == pytest.approx(0.5, abs=1e-6)


@pytest.mark.parametrize("combiner,lam", [("sum", 0.6), ("max", 1.1)])
def test_random_instance_hits_target(rng, combiner, lam):
    A = rng.standard_normal((8, 8)) + random_sparse(rng, 8, 8, 6)
    pen = PenaltySpec()
    eps = 0.3 * pen.value(-A)
    gauge = GaugeSpec(combiner, lam)
    pair, trace = solve_levelset(gauge, pen, A, eps, tol=1e-6)
    assert trace.converged
    resid = pen.value(pair[0] + pair[1] - A)
    assert abs(resid - eps) <= 1e-4 * max(1.0, eps)
    assert len(trace.meta["newton"]) - 1 <= 15


def test_monotone_convergence_from_left(rng):
    # classic level-set behavior: tau increases, v decreases to the target
    A = rng.standard_normal((6, 6)) * 2
    pen = PenaltySpec()
    eps = 0.2 * pen.value(-A)
    pair, trace = solve_levelset(GaugeSpec("sum", 0.8), pen, A, eps,
                                 tol=1e-8, inner_tol_floor=1e-12)
    assert trace.converged
    steps = trace.meta["newton"]
    taus = [s["tau"] for s in steps]
    vs = [s["v"] for s in steps]
    assert all(np.diff(taus) >= -1e-10)
    assert all(np.diff(vs) <= 1e-8 * max(1.0, vs[0]))
    assert vs[-1] >= eps - 1e-6 * max(1.0, eps)


def test_constraint_active_gauge_matches_tau(rng):
    A = rng.standard_normal((7, 7))
    pen = PenaltySpec()
    eps = 0.25 * pen.value(-A)
    gauge = GaugeSpec("max", 0.9)
    pair, trace = solve_levelset(gauge, pen, A, eps, tol=1e-8)
    assert trace.converged
    tau_final = trace.meta["newton"][-1]["tau"]
    assert gauge_eval(gauge, *pair) == pytest.approx(tau_final, abs=1e-6 * max(1.0, tau_final))


def test_warm_start_iteration_savings(rng):
    # logged sanity signal, not asserted: warm-started subsolves should
    # usually cost fewer iterations than the first cold solve
    A = rng.standard_normal((8, 8))
    pen = PenaltySpec()
    eps = 0.3 * pen.value(-A)
    _, trace = solve_levelset(GaugeSpec("max", 1.0), pen, A, eps, tol=1e-8)
    inner = [s.get("inner_iters") for s in trace.meta["newton"]
             if s.get("inner_iters") is not None]
    counts = np.diff([0] + inner)
    print(f"inner iterations per newton step: {counts}")
    assert len(counts) >= 2


def test_rejects_negative_eps(rng):
    with pytest.raises(ValueError):
        solve_levelset(GaugeSpec("sum", 1.0), PenaltySpec(),
                       np.eye(3), -1.0)


def test_levelset_with_huber(rng):
    A = rng.standard_normal((6, 6)) * 2
    pen = PenaltySpec("huber", delta=0.5)
    eps = 0.3 * pen.value(-A)
    pair, trace = solve_levelset(GaugeSpec("sum", 0.8), pen, A, eps, tol=1e-6)
    assert trace.converged
    assert abs(pen.value(pair[0] + pair[1] - A) - eps) <= 1e-4 * max(1.0, eps)


def test_levelset_classic_eps_zero(rng):
    # eps = 0 recovers the exact-decomposition formulation
    L0 = np.outer(rng.standard_normal(6), rng.standard_normal(6))
    S0 = random_sparse(rng, 6, 6, 4)
    A = L0 + S0
    pen = PenaltySpec()
    pair, trace = solve_levelset(GaugeSpec("sum", 0.5), pen, A, 0.0, tol=1e-8)
    assert trace.converged
    assert frobenius_norm(pair[0] + pair[1] - A) <= 2e-4 * frobenius_norm(A)
