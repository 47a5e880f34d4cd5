"""Lagrange shape functions on the reference interval [0, 1] and triangle
with vertices (0,0), (1,0), (0,1)."""

import numpy as np

from ..errors import InvalidArgumentError

_TOL = 1e-12

# local DOF coordinates, matching DofMap's local ordering
REFERENCE_NODES = {
    (1, 1): np.array([[0.0], [1.0]]),
    (2, 1): np.array([[0.0], [1.0], [0.5]]),
    (1, 2): np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
    (2, 2): np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0],
                      [0.5, 0.0], [0.5, 0.5], [0.0, 0.5]]),
}


def n_local_dofs(order, dim):
    return len(REFERENCE_NODES[(order, dim)])


def shape_functions(order, dim, points):
    """Values (npts, nb) and reference gradients (npts, nb, dim) at ``points``."""
    if (order, dim) not in REFERENCE_NODES:
        raise InvalidArgumentError(f"no P{order} element in {dim}D")
    p = np.atleast_2d(np.asarray(points, dtype=float))
    if p.shape[1] != dim:
        p = p.reshape(-1, dim)
    if dim == 1:
        t = p[:, 0]
        if np.any(t < -_TOL) or np.any(t > 1 + _TOL):
            raise InvalidArgumentError("point outside the reference interval")
        one = np.ones_like(t)
        if order == 1:
            vals = np.column_stack([1 - t, t])
            grads = np.column_stack([-one, one])
        else:
            vals = np.column_stack([(1 - t) * (1 - 2 * t), t * (2 * t - 1), 4 * t * (1 - t)])
            grads = np.column_stack([4 * t - 3, 4 * t - 1, 4 - 8 * t])
        return vals, grads[:, :, None]

    x, y = p[:, 0], p[:, 1]
    if np.any(x < -_TOL) or np.any(y < -_TOL) or np.any(x + y > 1 + _TOL):
        raise InvalidArgumentError("point outside the reference triangle")
    l0, l1, l2 = 1 - x - y, x, y
    # d(l0, l1, l2)/d(x, y)
    dl = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    if order == 1:
        vals = np.column_stack([l0, l1, l2])
        grads = np.broadcast_to(dl, (len(x), 3, 2)).copy()
        return vals, grads
    lam = (l0, l1, l2)
    vals = np.column_stack([l * (2 * l - 1) for l in lam]
                           + [4 * lam[i] * lam[j] for i, j in ((0, 1), (1, 2), (2, 0))])
    grads = np.empty((len(x), 6, 2))
    for i in range(3):
        grads[:, i, :] = (4 * lam[i] - 1)[:, None] * dl[i]
    for col, (i, j) in enumerate(((0, 1), (1, 2), (2, 0)), start=3):
        grads[:, col, :] = 4 * (lam[i][:, None] * dl[j] + lam[j][:, None] * dl[i])
    return vals, grads


def reference_basis(order, dim, local_point):
    """Basis values and gradients at a single reference point."""
    vals, grads = shape_functions(order, dim, np.reshape(local_point, (1, dim)))
    return vals[0], grads[0]
