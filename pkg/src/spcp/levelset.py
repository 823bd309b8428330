"""Newton root finding on the value function of the flipped problem.

Solves the residual-constrained formulation ``min gauge(L, S) s.t.
rho(op(L,S) - A) <= eps`` by driving ``v(tau) = eps``, where ``v`` is the
optimal flipped objective at gauge budget tau. Each Newton step solves a
flipped subproblem (warm-started, with a tolerance tied to the remaining
root gap) and evaluates the closed-form derivative from the polar gauge
of the residual gradient.
"""

import numpy as np

from .gauges import value_fn_derivative
from .linalg import check_matrix, frobenius_norm
from .subsolvers import FlipProblem, IterState, solve_flip_qn, solve_flip_spg
from .trace import SolveTrace

__all__ = ["LevelSetError", "solve_levelset"]


class LevelSetError(RuntimeError):
    """Raised when the value function is flat at the current budget
    (constraint inactive or tau beyond the Pareto range)."""


def solve_levelset(gauge, penalty, A, eps, tol=1e-6, op=None, max_newton=30,
                   inner_solver="auto", inner_tol_floor=1e-10,
                   inner_max_iters=20000, qn_scale=1.25, trace=None,
                   error_fn=None, time_limit=None):
    """Level-set driver for the residual-constrained problem.

    Parameters
    ----------
    gauge : GaugeSpec
    penalty : PenaltySpec
        ``eps`` is a target on this penalty's value (for least squares,
        ``0.5 * ||residual||_F^2``).
    A : array_like
        Observed matrix.
    eps : float
        Target misfit level; must be nonnegative.
    tol : float
        Root tolerance: stop when ``|v(tau) - eps| <= tol * max(1, eps)``.
    inner_solver : {'auto', 'spg', 'qn'}
        Flip subproblem solver; 'auto' picks SPG for the sum gauge and
        the quasi-Newton scheme for the max gauge.

    Returns
    -------
    (L, S), SolveTrace
        The trace accumulates every inner iteration; Newton-step records
        are in ``trace.meta['newton']``.
    """
    A = check_matrix(A, "A")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if trace is None:
        trace = SolveTrace(error_fn=error_fn)
    trace.meta.setdefault("newton", [])

    if inner_solver == "auto":
        inner_solver = "spg" if gauge.combiner == "sum" else "qn"
    if inner_solver == "spg":
        def subsolve(problem, tol_k, gap_k, state):
            return solve_flip_spg(problem, tol=tol_k, gap_tol=gap_k,
                                  max_iters=inner_max_iters, state=state,
                                  trace=trace, time_limit=time_limit)
    elif inner_solver == "qn":
        def subsolve(problem, tol_k, gap_k, state):
            return solve_flip_qn(problem, tol=tol_k, gap_tol=gap_k,
                                 max_iters=inner_max_iters, qn_scale=qn_scale,
                                 state=state, trace=trace,
                                 time_limit=time_limit)
    else:
        raise ValueError(f"unknown inner solver {inner_solver!r}")

    zero = np.zeros_like(A)
    root_tol = tol * max(1.0, eps)
    v0 = penalty.value(-A if op is None else (op.apply(np.zeros(2 * A.size))
                                              - A.ravel()))
    if eps >= v0 - root_tol:
        trace.record(0, v0, frobenius_norm(A))
        trace.meta["newton"].append({"tau": 0.0, "v": v0, "vprime": None})
        trace.finish(True, "zero pair already meets the misfit target")
        return (zero.copy(), zero.copy()), trace

    scale = max(1.0, frobenius_norm(A))
    state = IterState.zeros(A.shape)
    tau = 0.0
    v = v0
    vprime = value_fn_derivative(gauge, penalty, op, zero, zero, A)
    trace.meta["newton"].append({"tau": tau, "v": v, "vprime": vprime})
    tau_lo, tau_hi = 0.0, None
    inner_tol = None
    pair = (zero.copy(), zero.copy())
    converged = False

    bound = np.sqrt(2.0) if op is None else op.norm_bound
    for _ in range(max_newton):
        gap = v - eps
        if vprime >= -1e-14:
            if tau_hi is None:
                raise LevelSetError(
                    "value function is flat: constraint inactive or tau "
                    "beyond the Pareto range")
            tau_next = 0.5 * (tau_lo + tau_hi)
        else:
            tau_next = tau - gap / vprime
            if tau_hi is not None and not (tau_lo < tau_next < tau_hi):
                # Newton left the root bracket; bisect instead
                tau_next = 0.5 * (tau_lo + tau_hi)
        tau_next = max(tau_next, 0.0)

        # the subsolver must certify the objective value itself (duality
        # gap) to a tenth of the remaining root gap; the projected-gradient
        # tolerance is scaled consistently for least-squares-type penalties
        gap_k = max(inner_tol_floor * max(1.0, eps), 0.1 * abs(gap))
        inner_gap = gap_k if inner_tol is None else min(inner_tol, gap_k)
        inner_tol = inner_gap
        grad_scale = max(bound * np.sqrt(2.0 * max(v, eps, 1e-300)), 1e-8)
        pg_tol = max(1e-14, 0.1 * inner_gap / (grad_scale * scale))

        problem = FlipProblem(gauge=gauge, tau=tau_next, penalty=penalty, A=A, op=op)
        pair, _ = subsolve(problem, pg_tol, inner_gap, state)
        tau = tau_next
        v = problem.objective(*pair)
        vprime = value_fn_derivative(gauge, penalty, op, pair[0], pair[1], A)
        # a slack gauge constraint at (near-)target misfit means tau has
        # overshot the Pareto point: the root must be bracketed below
        active = tau <= 0.0 or (gauge.evaluate(*pair) >= tau * (1.0 - 1e-6))
        trace.meta["newton"].append({"tau": tau, "v": v, "vprime": vprime,
                                     "active": active,
                                     "inner_iters": state.iters})
        if v < eps - root_tol or (not active and v <= eps + root_tol):
            tau_hi = tau if tau_hi is None else min(tau_hi, tau)
        else:
            tau_lo = max(tau_lo, tau)
        if abs(v - eps) <= root_tol and active:
            converged = True
            break
        if time_limit is not None and trace.elapsed() > time_limit:
            break

    message = "" if converged else "level-set driver: Newton budget exhausted"
    trace.finish(converged, message)
    return pair, trace
