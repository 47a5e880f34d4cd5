"""Discrete L2 norms and point evaluation of finite element fields."""

import numpy as np
from scipy.spatial import cKDTree

from ..errors import InvalidArgumentError
from .basis import shape_functions
from .quadrature import gauss_legendre


def l2_norm(coeffs, mass):
    v = np.asarray(coeffs, dtype=float)
    return float(np.sqrt(max(v @ (mass @ v), 0.0)))


def l2_rel_error(coeffs, ref_coeffs, mass):
    v = np.asarray(coeffs, dtype=float)
    w = np.asarray(ref_coeffs, dtype=float)
    if v.shape != w.shape:
        raise InvalidArgumentError(f"length mismatch {v.shape} vs {w.shape}")
    denom = l2_norm(w, mass)
    if denom == 0.0:
        raise ZeroDivisionError("reference field has zero L2 norm")
    return l2_norm(v - w, mass) / denom


def locate_1d(mesh, x):
    """Element index and local coordinate t in [0, 1] for each point."""
    ends = mesh.nodes[mesh.elements, 0]               # (ne, 2)
    left = ends.min(axis=1)
    order = np.argsort(left, kind="stable")
    e = order[np.clip(np.searchsorted(left[order], x, side="right") - 1, 0, len(order) - 1)]
    x0, x1 = ends[e, 0], ends[e, 1]
    t = np.clip((x - x0) / (x1 - x0), 0.0, 1.0)
    return e, t[:, None]


def locate_2d(mesh, pts, tol=1e-10):
    v = mesh.nodes[mesh.elements]
    centroids = v.mean(axis=1)
    jac = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=2)
    inv = np.linalg.inv(jac)
    tree = cKDTree(centroids)
    k = min(12, mesh.n_elements)
    _, cand = tree.query(pts, k=k)
    cand = np.atleast_2d(cand).reshape(len(pts), k)
    elem = np.full(len(pts), -1, dtype=np.int64)
    ref = np.zeros((len(pts), 2))
    for col in range(k):
        todo = elem < 0
        if not todo.any():
            break
        e = cand[todo, col]
        xi = np.einsum("pij,pj->pi", inv[e], pts[todo] - v[e, 0])
        ok = (xi[:, 0] >= -tol) & (xi[:, 1] >= -tol) & (xi.sum(axis=1) <= 1 + tol)
        idx = np.flatnonzero(todo)[ok]
        elem[idx] = e[ok]
        ref[idx] = xi[ok]
    for p in np.flatnonzero(elem < 0):
        xi = np.einsum("eij,ej->ei", inv, pts[p] - v[:, 0])
        bad = np.maximum.reduce([-xi[:, 0], -xi[:, 1], xi.sum(axis=1) - 1])
        e = int(np.argmin(bad))
        if bad[e] > 1e-8:
            raise InvalidArgumentError(f"point {pts[p]} lies outside the mesh")
        elem[p], ref[p] = e, xi[e]
    ref = np.clip(ref, 0.0, 1.0)
    over = ref.sum(axis=1) > 1
    ref[over] /= ref[over].sum(axis=1, keepdims=True)
    return elem, ref


def evaluate_field(dofmap, coeffs, points):
    """Values of sum_k c_k phi_k at ``points``; ``coeffs`` may be batched (..., n_dofs)."""
    mesh = dofmap.mesh
    pts = np.asarray(points, dtype=float)
    if mesh.dim == 1:
        e, ref = locate_1d(mesh, pts.reshape(-1))
    else:
        e, ref = locate_2d(mesh, pts.reshape(-1, 2))
    vals, _ = shape_functions(dofmap.order, mesh.dim, ref)
    dofs = dofmap.element_dofs[e]                      # (npts, nb)
    c = np.asarray(coeffs, dtype=float)
    return np.einsum("...pb,pb->...p", c[..., dofs], vals)


def l2_distance_1d(f, g, breakpoints, points_per_cell=5, weight=None):
    """(int (f - g)^2)^(1/2) and (int g^2)^(1/2) by Gauss rules between breakpoints.

    ``f`` and ``g`` map point arrays to values. Pass every kink of both
    functions as a breakpoint so the rule stays accurate.
    """
    bp = np.unique(np.asarray(breakpoints, dtype=float))
    t, w = gauss_legendre(points_per_cell)
    a, b = bp[:-1, None], bp[1:, None]
    x = (a + (b - a) * t).ravel()
    wx = ((b - a) * w).ravel()
    fv, gv = f(x), g(x)
    return float(np.sqrt(np.sum(wx * (fv - gv) ** 2))), float(np.sqrt(np.sum(wx * gv**2)))
