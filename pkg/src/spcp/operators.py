"""Linear operators on flattened matrices and (L, S) pairs.

Operators map 1-D vectors to 1-D vectors and carry their adjoint plus an
upper bound on the operator norm. A low-rank/sparse pair (L, S) of shape
(m, n) each is flattened as ``concat(vec(L), vec(S))``.
"""

import numpy as np

__all__ = [
    "LinearOp",
    "pair_to_vec",
    "vec_to_pair",
    "op_identity",
    "op_sum_identity",
    "op_restrict",
    "op_stack",
    "op_compose",
    "op_scale",
]


def pair_to_vec(L, S):
    return np.concatenate([np.ravel(L), np.ravel(S)])


def vec_to_pair(x, m, n):
    mn = m * n
    return x[:mn].reshape(m, n), x[mn:].reshape(m, n)


class LinearOp:
    """Linear map between flat vectors with an explicit adjoint.

    Parameters
    ----------
    fwd, adj : callable
        Forward and adjoint maps on 1-D arrays.
    dim_in, dim_out : int
        Input and output dimensions.
    norm_bound : float
        Upper bound on the operator norm.
    """

    def __init__(self, fwd, adj, dim_in, dim_out, norm_bound, gram_inv=None):
        self._fwd = fwd
        self._adj = adj
        self.dim_in = int(dim_in)
        self.dim_out = int(dim_out)
        self.norm_bound = float(norm_bound)
        # optional: apply the (pseudo)inverse of op @ op.T on its range,
        # used for feasibility restoration of equality/ball constraints
        self.gram_inv = gram_inv

    def apply(self, x):
        x = np.ravel(x)
        if x.size != self.dim_in:
            raise ValueError(f"expected input of size {self.dim_in}, got {x.size}")
        return self._fwd(x)

    def adjoint(self, y):
        y = np.ravel(y)
        if y.size != self.dim_out:
            raise ValueError(f"expected output-space vector of size {self.dim_out}, got {y.size}")
        return self._adj(y)

    def __call__(self, x):
        return self.apply(x)


def op_identity(dim):
    return LinearOp(lambda x: x.copy(), lambda y: y.copy(), dim, dim, 1.0,
                    gram_inv=lambda v: v.copy())


def op_sum_identity(m, n):
    """Map (L, S) to L + S; adjoint sends R to (R, R)."""
    mn = m * n

    def fwd(x):
        return x[:mn] + x[mn:]

    def adj(y):
        return np.concatenate([y, y])

    # op @ op.T = 2 I
    return LinearOp(fwd, adj, 2 * mn, mn, np.sqrt(2.0), gram_inv=lambda v: 0.5 * v)


def _mask_from_indices(omega, m, n):
    mask = np.zeros((m, n), dtype=bool)
    for idx in omega:
        i, j = idx
        if not (0 <= i < m and 0 <= j < n):
            raise ValueError(f"index {idx} out of range for {m}x{n} matrix")
        mask[i, j] = True
    return mask


def op_restrict(omega, m, n):
    """Zero the entries outside the observed set.

    ``omega`` is either a boolean (m, n) mask or an iterable of
    0-based (row, col) pairs.
    """
    if isinstance(omega, np.ndarray) and omega.dtype == bool:
        if omega.shape != (m, n):
            raise ValueError(f"mask shape {omega.shape} does not match ({m}, {n})")
        mask = omega.copy()
    else:
        mask = _mask_from_indices(omega, m, n)
    flat = mask.ravel()

    def fwd(x):
        out = np.zeros_like(x)
        out[flat] = x[flat]
        return out

    # self-adjoint projection, and idempotent on its range
    return LinearOp(fwd, fwd, m * n, m * n, 1.0, gram_inv=fwd)


def op_stack(ops):
    """Concatenate operator outputs; the adjoint sums the block adjoints.

    ``norm_bound**2`` of the stack equals the sum of squared block bounds.
    """
    ops = list(ops)
    if not ops:
        raise ValueError("op_stack needs at least one operator")
    dim_in = ops[0].dim_in
    if any(op.dim_in != dim_in for op in ops):
        raise ValueError("stacked operators must share the input space")
    dims_out = [op.dim_out for op in ops]
    offsets = np.concatenate([[0], np.cumsum(dims_out)])

    def fwd(x):
        return np.concatenate([op.apply(x) for op in ops])

    def adj(y):
        out = np.zeros(dim_in)
        for op, lo, hi in zip(ops, offsets[:-1], offsets[1:]):
            out += op.adjoint(y[lo:hi])
        return out

    bound = np.sqrt(sum(op.norm_bound ** 2 for op in ops))
    return LinearOp(fwd, adj, dim_in, int(offsets[-1]), bound)


def op_compose(outer, inner):
    """outer(inner(x)) with the product norm bound."""
    if inner.dim_out != outer.dim_in:
        raise ValueError("operator dimensions do not compose")
    gram_inv = None
    if outer.gram_inv is not None and inner.gram_inv is not None:
        # covers our algebra (projections and scaled identities, e.g.
        # P_Omega o [I I] whose gram is 2 P_Omega): the pseudo-inverse of the
        # composed gram is the composition of the factor gram inverses
        def gram_inv(v):
            return inner.gram_inv(outer.gram_inv(v))

    return LinearOp(
        lambda x: outer.apply(inner.apply(x)),
        lambda y: inner.adjoint(outer.adjoint(y)),
        inner.dim_in,
        outer.dim_out,
        outer.norm_bound * inner.norm_bound,
        gram_inv=gram_inv,
    )


def op_scale(op, c):
    c = float(c)
    gram_inv = None
    if op.gram_inv is not None and c != 0.0:
        gram_inv = lambda v: op.gram_inv(v) / (c * c)
    return LinearOp(
        lambda x: c * op.apply(x),
        lambda y: c * op.adjoint(y),
        op.dim_in,
        op.dim_out,
        abs(c) * op.norm_bound,
        gram_inv=gram_inv,
    )
