"""Primal-dual hybrid gradient (Chambolle-Pock) reference solver for
``min psi0(x) + psi1(op(x) - b)``.

No outer loop: the dual ascent step (through the conjugate prox via the
Moreau identity) alternates with a primal prox descent step on an
extrapolated point, with relaxation fixed at 1. The step sizes satisfy
``tau * sigma < 1 / ||op||^2``; their product is pinned just below that
bound, leaving the ratio as the single effective parameter.
"""

from collections import deque

import numpy as np

from .trace import SolveTrace

__all__ = ["solve_pdhg"]


def solve_pdhg(psi0, psi1, op, b, step_ratio=1.0, step_product=None,
               tol=1e-8, max_iters=20000, x0=None, z0=None, window=10,
               trace=None, error_fn=None, time_limit=None):
    """Run PDHG until the iterates stall or the budget runs out.

    Parameters
    ----------
    psi0, psi1 : ProxHandle
        The direct and the operator-composed terms.
    op : LinearOp
    b : array or None
        Offset inside psi1.
    step_ratio : float
        tau / sigma; the product is ``step_product`` (default
        ``0.99 / ||op||^2``).
    tol : float
        Relative change of (x, z) over a ``window``-iteration span below
        which the run counts as converged.

    Returns
    -------
    (x, trace)
    """
    bound_sq = op.norm_bound ** 2
    if bound_sq <= 0:
        raise ValueError("operator norm bound must be positive")
    limit = 1.0 / bound_sq
    if step_product is None:
        step_product = 0.99 * limit
    if not (0.0 < step_product < limit):
        raise ValueError(
            f"step product {step_product} violates tau*sigma < 1/||op||^2 = {limit}")
    if step_ratio <= 0:
        raise ValueError("step ratio must be positive")
    tau = float(np.sqrt(step_product * step_ratio))
    sigma = float(np.sqrt(step_product / step_ratio))

    b_vec = None if b is None else np.ravel(np.asarray(b, dtype=float))
    x = np.zeros(op.dim_in) if x0 is None else np.asarray(x0, dtype=float).copy()
    z = np.zeros(op.dim_out) if z0 is None else np.asarray(z0, dtype=float).copy()
    x_bar = x.copy()
    if trace is None:
        trace = SolveTrace(error_fn=error_fn)

    changes = deque(maxlen=window)
    it0 = trace.iterations
    converged = False
    for k in range(1, max_iters + 1):
        arg = op.apply(x_bar)
        if b_vec is not None:
            arg = arg - b_vec
        z_new = psi1.conj_prox(z + sigma * arg, sigma)
        x_new = psi0.prox(x - tau * op.adjoint(z_new), tau)
        x_bar = 2.0 * x_new - x

        misfit = op.apply(x_new)
        if b_vec is not None:
            misfit = misfit - b_vec
        denom = max(1.0, float(np.linalg.norm(x_new)) + float(np.linalg.norm(z_new)))
        change = (float(np.linalg.norm(x_new - x))
                  + float(np.linalg.norm(z_new - z))) / denom
        changes.append(change)
        x, z = x_new, z_new

        trace.record(it0 + k, psi0.eval(x) + psi1.eval(misfit),
                     float(np.linalg.norm(misfit)), point=x)
        if len(changes) == window and max(changes) <= tol:
            converged = True
            break
        if time_limit is not None and trace.elapsed() > time_limit:
            break

    trace.finish(converged, "" if converged else "pdhg: iteration budget exhausted")
    return x, trace
