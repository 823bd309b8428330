"""Dual smoothing with an inexact proximal-point outer loop.

The composite problem is ``min psi0(x) + sum_i psi_i(L_i x - b_i)``. Each
outer step adds a proximal term ``mu/2 ||x - y||^2``, making the dual of
the smoothed subproblem differentiable with a ``||L||^2 / mu`` Lipschitz
gradient; the subproblem is solved by accelerated proximal gradient
(FISTA) on the dual, where the dual gradient is a single prox of psi0 and
the dual prox splits blockwise through the Moreau identity. Accuracy of
an approximate subproblem solution x is certified a posteriori through a
subgradient d of the smoothed objective: ``||x - argmin|| <= ||d|| / mu``.
"""

import numpy as np

from .handles import ProxHandle
from .operators import op_scale
from .trace import SolveTrace

__all__ = [
    "CompositeModel",
    "dual_gradient",
    "dual_objective",
    "fista_dual",
    "objective_subgradient",
    "proximal_point",
]


class ConfigurationError(ValueError):
    """Model lacks a capability the requested computation needs."""


class CompositeModel:
    """Composite objective ``psi0(x) + sum_i psi_i(L_i x - b_i)``.

    Parameters
    ----------
    psi0 : ProxHandle
        Term in the primal variable directly (no operator).
    terms : sequence of (handle, op, offset)
        ``handle`` a ProxHandle, ``op`` a LinearOp on the primal space,
        ``offset`` an array in the op's output space or None.
    dim : int
        Primal dimension.
    rescale : bool
        Normalize every operator to unit norm bound (the handles absorb
        the scaling), mirroring the automatic variable rescaling of the
        reference software. Solutions are unaffected.
    """

    def __init__(self, psi0, terms, dim, rescale=True):
        self.psi0 = psi0
        self.dim = int(dim)
        self.ops = []
        self.handles = []       # shifted + scaled: psi_tilde_i(op_i x)
        self.raw = []           # (handle, op, offset) as given
        self._scales = []
        for handle, op, offset in terms:
            if op.dim_in != self.dim:
                raise ValueError("term operator does not match the primal dimension")
            s = op.norm_bound if (rescale and op.norm_bound > 0) else 1.0
            op_eff = op_scale(op, 1.0 / s) if s != 1.0 else op
            h_eff = handle.scaled_arg(s) if s != 1.0 else handle
            if offset is not None:
                h_eff = h_eff.shifted(np.ravel(offset) / s)
            self.ops.append(op_eff)
            self.handles.append(h_eff)
            self.raw.append((handle, op, None if offset is None else np.ravel(offset)))
            self._scales.append(s)
        if not self.ops:
            raise ValueError("at least one operator term is required")
        self._block_ends = np.cumsum([op.dim_out for op in self.ops])
        self.dual_dim = int(self._block_ends[-1])
        self.op_norm_sq = float(sum(op.norm_bound ** 2 for op in self.ops))

    def blocks(self, z):
        start = 0
        for end in self._block_ends:
            yield z[start:end]
            start = end

    def apply_ops(self, x):
        return np.concatenate([op.apply(x) for op in self.ops])

    def adjoint_ops(self, z):
        out = np.zeros(self.dim)
        for op, zi in zip(self.ops, self.blocks(z)):
            out += op.adjoint(zi)
        return out

    def objective(self, x):
        total = self.psi0.eval(x)
        for handle, op in zip(self.handles, self.ops):
            total += handle.eval(op.apply(x))
        return float(total)

    def misfit_norm(self, x):
        """Original-unit residual norm of the first term, ``||L_1 x - b_1||``."""
        handle, op, offset = self.raw[0]
        u = op.apply(x)
        if offset is not None:
            u = u - offset
        return float(np.linalg.norm(u))


def dual_gradient(model, y, mu, w):
    """Gradient of the smoothed dual's differentiable part at ``w``:
    ``prox_{psi0/mu}(y + L^T w / mu)``, the smoothed-primal point that the
    dual variable ``w`` induces."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    c = y + model.adjoint_ops(w) / mu
    return model.psi0.prox(c, 1.0 / mu)


def dual_objective(model, y, mu, z):
    """Value of the dual objective ``Phi*(L^T z) + Psi*(-z)`` of the
    mu-smoothed subproblem centered at ``y``."""
    v = model.adjoint_ops(z)
    x = model.psi0.prox(y + v / mu, 1.0 / mu)
    diff = x - y
    phi_star = (float(np.dot(v, x)) - model.psi0.eval(x)
                - 0.5 * mu * float(np.dot(diff, diff)))
    psi_star = 0.0
    for handle, zi in zip(model.handles, model.blocks(z)):
        psi_star += handle.conj_eval(-zi)
    return phi_star + psi_star


def _subgradient_certificate(model, y, mu, z, feas_scale):
    """A subgradient of the smoothed objective at a candidate point.

    Returns ``(d, x)`` with ``d`` in the subdifferential of the smoothed
    objective at ``x``, so ``||d|| / mu`` bounds the distance from ``x``
    to the exact subproblem minimizer; ``d`` is None when no valid
    subgradient is available. For a model with a single indicator term
    the candidate is first restored to exact feasibility along the
    operator range, so the term's normal cone is genuinely available.
    """
    v = model.adjoint_ops(z)
    x = model.psi0.prox(y + v / mu, 1.0 / mu)
    feas_tol = 1e-7 * feas_scale

    single = len(model.ops) == 1
    handle = model.handles[0] if single else None
    op = model.ops[0] if single else None

    if single and handle.is_indicator and op.gram_inv is not None:
        u = op.apply(x)
        u_feas = handle.project(u)
        x_hat = x - op.adjoint(op.gram_inv(u - u_feas))
        # prox optimality no longer applies at the restored point, so
        # select a psi0 subgradient explicitly; at a solution it equals
        # L^T z - mu (x - y), which serves as the selection target
        smooth = mu * (x_hat - y)
        g0 = model.psi0.subgrad_select(x_hat, target=v - smooth)
        if g0 is None:
            return None, x_hat
        base = g0 + smooth
        cone_hint = -op.gram_inv(op.apply(base))
        g1 = handle.subgrad_select(u_feas, target=cone_hint,
                                   feas_tol=feas_tol)
        if g1 is None:
            return None, x_hat
        return base + op.adjoint(g1), x_hat

    # candidate is the prox output itself; its psi0 subgradient is exact
    # by prox optimality and sums with mu(x - y) to L^T z
    d = v.copy()
    for handle_i, op_i, zi in zip(model.handles, model.ops, model.blocks(z)):
        gi = handle_i.subgrad_select(op_i.apply(x), target=-zi, feas_tol=feas_tol)
        if gi is None:
            return None, x
        d += op_i.adjoint(gi)
    return d, x


def objective_subgradient(model, x, z, feas_scale=1.0):
    """A small-as-available subgradient of the unsmoothed objective at a
    (feasible) point ``x``, or None. The dual point ``z`` guides the
    selections. ``||result|| / mu`` bounds the proximal fixed-point
    residual of ``x`` at smoothing weight ``mu``."""
    feas_tol = 1e-7 * feas_scale
    v = model.adjoint_ops(z)
    g0 = model.psi0.subgrad_select(x, target=v)
    if g0 is None:
        return None
    single = len(model.ops) == 1
    if single and model.handles[0].is_indicator and model.ops[0].gram_inv is not None:
        op = model.ops[0]
        handle = model.handles[0]
        u = op.apply(x)
        if float(np.linalg.norm(u - handle.project(u))) > feas_tol:
            return None
        cone_hint = -op.gram_inv(op.apply(g0))
        g1 = handle.subgrad_select(handle.project(u), target=cone_hint,
                                   feas_tol=feas_tol)
        if g1 is None:
            return None
        return g0 + op.adjoint(g1)
    d = g0
    for handle_i, op_i, zi in zip(model.handles, model.ops, model.blocks(z)):
        gi = handle_i.subgrad_select(op_i.apply(x), target=-zi, feas_tol=feas_tol)
        if gi is None:
            return None
        d = d + op_i.adjoint(gi)
    return d


def _can_certify(handle):
    inner = handle
    while hasattr(inner, "inner"):
        inner = inner.inner
    overridden = type(inner).subgrad_select is not ProxHandle.subgrad_select
    return overridden or inner.is_indicator


def fista_dual(model, y, mu, inner_tol=0.0, max_iters=500, z0=None,
               force_t1=False, restart="objective", cert_every=10,
               trace=None, error_fn=None, time_limit=None, z_log=None):
    """Accelerated proximal gradient on the dual of the smoothed problem.

    Iterates: dual gradient through ``prox_{psi0/mu}``, blockwise
    conjugate prox step of length ``1/Lambda`` with
    ``Lambda = ||L||^2 / mu``, and the usual momentum recursion
    ``t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2``. Forcing ``t_k = 1``
    degrades it to plain proximal gradient descent on the dual.

    Parameters
    ----------
    inner_tol : float
        Target on the certified distance to the subproblem minimizer;
        checked every ``cert_every`` iterations. Zero disables early
        stopping.
    restart : {'objective', None}
        Reset momentum when the dual objective increases (needs conjugate
        evaluations on all term handles).

    Returns
    -------
    (x, z, trace)
        Certified primal point (when a certificate was available), final
        dual point, and the trace; ``trace.meta['cert_dist']`` carries the
        last certified distance bound.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    y = np.asarray(y, dtype=float)
    lam = model.op_norm_sq / mu
    z = np.zeros(model.dual_dim) if z0 is None else np.asarray(z0, dtype=float).copy()
    w = z.copy()
    t = 1.0
    if trace is None:
        trace = SolveTrace(error_fn=error_fn)
    feas_scale = max(1.0, float(np.linalg.norm(y)))

    use_q = restart == "objective"
    q_prev = None
    if use_q:
        try:
            q_prev = dual_objective(model, y, mu, z)
        except NotImplementedError:
            use_q = False

    it0 = trace.iterations
    best = (None, None, None)  # (dist bound, point, subgradient)
    converged = False
    x_tilde = dual_gradient(model, y, mu, w)
    for k in range(1, max_iters + 1):
        G = model.apply_ops(x_tilde)
        v = -w + G / lam
        z_new = np.empty_like(z)
        start = 0
        for handle, block in zip(model.handles, model.blocks(v)):
            z_new[start:start + block.size] = -handle.conj_prox(block, 1.0 / lam)
            start += block.size

        restarted = False
        if use_q:
            q_new = dual_objective(model, y, mu, z_new)
            if q_prev is not None and q_new > q_prev + 1e-14 * max(1.0, abs(q_prev)):
                restarted = True
            q_prev = q_new
            trace.meta.setdefault("dual_objective", []).append(q_new)
            if restarted:
                trace.meta.setdefault("restarts", []).append(it0 + k)

        if force_t1 or restarted:
            w = z_new.copy()
            t = 1.0
        else:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            theta = (t - 1.0) / t_next
            w = z_new + theta * (z_new - z)
            t = t_next
        z = z_new
        if z_log is not None:
            z_log.append(z.copy())

        check = (k % cert_every == 0) or k == max_iters
        x_tilde = dual_gradient(model, y, mu, w)
        trace.record(it0 + k, model.objective(x_tilde),
                     model.misfit_norm(x_tilde), point=x_tilde)
        if check:
            d, x_cert = _subgradient_certificate(model, y, mu, z, feas_scale)
            if d is not None:
                dist = float(np.linalg.norm(d)) / mu
                feas_scale = max(1.0, float(np.linalg.norm(x_cert)))
                if best[0] is None or dist < best[0]:
                    best = (dist, x_cert, d)
                if inner_tol > 0.0 and dist <= inner_tol:
                    converged = True
                    break
        if time_limit is not None and trace.elapsed() > time_limit:
            break

    if best[1] is None:
        x_out = dual_gradient(model, y, mu, z)
        trace.meta["cert_dist"] = None
        trace.meta["cert_vec"] = None
        trace.finish(False, "fista_dual: no certificate available")
    else:
        x_out = best[1]
        trace.meta["cert_dist"] = best[0]
        trace.meta["cert_vec"] = best[2]
        if converged:
            trace.finish(True, "")
        else:
            trace.finish(inner_tol <= 0.0,
                         "" if inner_tol <= 0.0 else
                         "fista_dual: certificate target not met in budget")
    return x_out, z, trace


def proximal_point(model, mu, outer_tol=1e-6, max_outer=60, inner_max_iters=2000,
                   eps0=None, y0=None, cert_every=10, restart="objective",
                   trace=None, error_fn=None, time_limit=None):
    """Inexact proximal-point outer loop over the smoothed subproblems.

    The k-th subproblem is solved to a certified distance
    ``eps_k = eps0 * 2^{-k}`` (a summable error sequence), warm-starting
    the dual variable. From the subproblem subgradient d at the new point
    y+, ``d - mu (y+ - y)`` is a subgradient of the unsmoothed objective
    at y+, and ``||d - mu (y+ - y)|| / mu`` bounds the fixed-point
    residual of the outer map; the loop terminates when that certified
    bound drops below ``outer_tol``, or at an exact fixed point (finite
    convergence on polyhedral problems).

    ``mu`` may be a scalar or a sequence (bounded schedules only; the
    last entry repeats).
    """
    mus = [float(m) for m in np.atleast_1d(mu)]
    if any(m <= 0 for m in mus):
        raise ValueError("mu must be positive")
    for handle in model.handles:
        if not _can_certify(handle):
            raise ConfigurationError(
                "a term handle cannot produce subgradients, so the outer "
                "loop has no accuracy certificate")
    y = np.zeros(model.dim) if y0 is None else np.asarray(y0, dtype=float).copy()
    if trace is None:
        trace = SolveTrace(error_fn=error_fn)
    trace.meta.setdefault("outer_steps", [])

    z = None
    if eps0 is None:
        x_probe = dual_gradient(model, y, mus[0], np.zeros(model.dual_dim))
        eps0 = max(1.0, float(np.linalg.norm(x_probe - y)))

    converged = False
    message = "proximal_point: outer budget exhausted"
    for k in range(max_outer):
        mu_k = mus[min(k, len(mus) - 1)]
        # geometric error decay per the convergence theory; the floor only
        # bounds inner work once far beyond the outer target
        eps_k = max(eps0 * 0.5 ** k, 1e-3 * outer_tol)
        x, z, _ = fista_dual(model, y, mu_k, inner_tol=eps_k,
                             max_iters=inner_max_iters, z0=z,
                             cert_every=cert_every, restart=restart,
                             trace=trace, time_limit=time_limit)
        dist = trace.meta.get("cert_dist")
        d = trace.meta.get("cert_vec")
        stationarity = None
        if d is not None:
            # two valid subgradients of the unsmoothed objective at x: the
            # subproblem certificate minus the prox-term gradient, and a
            # direct nearest-to-zero selection; certify with the smaller
            g_f = d - mu_k * (x - y)
            stationarity = float(np.linalg.norm(g_f)) / mu_k
            d_direct = objective_subgradient(
                model, x, z, feas_scale=max(1.0, float(np.linalg.norm(x))))
            if d_direct is not None:
                stationarity = min(stationarity,
                                   float(np.linalg.norm(d_direct)) / mu_k)
        trace.meta["outer_steps"].append({"outer": k, "mu": mu_k, "eps": eps_k,
                                          "cert_dist": dist,
                                          "stationarity": stationarity})
        if np.array_equal(x, y):
            converged = True
            message = "proximal_point: exact fixed point (finite convergence)"
            break
        if stationarity is not None and stationarity <= outer_tol:
            y = x
            converged = True
            message = ""
            break
        y = x
        if time_limit is not None and trace.elapsed() > time_limit:
            message = "proximal_point: time limit reached"
            break

    trace.finish(converged, message)
    return y, trace
