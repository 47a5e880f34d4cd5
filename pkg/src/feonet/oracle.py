"""Classical FEM solves used as ground truth: sparse LU for linear
problems, Newton's method for the Burgers nonlinearity."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, InvalidArgumentError, SingularMatrixError
from .fem.assembly import LoadVector, assemble_bilinear, element_geometry
from .fem.norms import l2_distance_1d
from .mesh import build_dofmap, interval_mesh_from_nodes, refine_uniform

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-14


@dataclass
class OracleSolution:
    alpha_star: np.ndarray
    residual_norm: float
    newton_iters: int = 0
    residual_history: list = field(default_factory=list)


def _as_array(load):
    return np.asarray(load.F if isinstance(load, LoadVector) else load, dtype=float)


def factorize(matrix):
    """Sparse LU with partial pivoting; rejects numerically singular matrices."""
    A = sp.csc_matrix(matrix)
    if A.shape[0] != A.shape[1]:
        raise InvalidArgumentError(f"matrix must be square, got {A.shape}")
    scale = spla.norm(A, np.inf) if A.nnz else 0.0
    try:
        lu = spla.splu(A, permc_spec="COLAMD", diag_pivot_thresh=1.0)
    except RuntimeError as exc:
        raise SingularMatrixError(str(exc)) from None
    pivots = np.abs(lu.U.diagonal())
    if scale == 0.0 or pivots.min() < PIVOT_TOL * scale:
        raise SingularMatrixError(f"pivot {pivots.min():.3e} below {PIVOT_TOL:g} * ||A|| = {scale:.3e}")
    return lu


def _cached_lu(system):
    lu = system.extra.get("lu")
    if lu is None:
        lu = system.extra["lu"] = factorize(system.A)
    return lu


def solve_linear(system, load):
    """Solve A alpha = F. ``load`` may be a vector or a (M, n) batch."""
    F = _as_array(load)
    if F.shape[-1] != system.n:
        raise InvalidArgumentError(f"load has length {F.shape[-1]}, system has {system.n} rows")
    lu = _cached_lu(system)
    if F.ndim == 2:
        alpha = lu.solve(np.ascontiguousarray(F.T)).T
        res = np.linalg.norm((system.A @ alpha.T).T - F, axis=1)
        return OracleSolution(alpha, float(res.max(initial=0.0)))
    alpha = lu.solve(F)
    res = float(np.linalg.norm(system.A @ alpha - F))
    return OracleSolution(alpha, res)


def burgers_residual(system, alpha, F):
    return system.A @ alpha - system.tensor.apply(alpha) - F


def solve_burgers_newton(system, load, init=None, tol=1e-12, max_iters=25):
    """Newton iteration on r(a) = A a - q(a) - F with J = A - dq/da.

    The default initial guess is the solution with the nonlinearity dropped.
    """
    if system.tensor is None:
        raise InvalidArgumentError("system was assembled without the Burgers tensor")
    F = _as_array(load)
    alpha = solve_linear(system, F).alpha_star if init is None else np.array(init, dtype=float)
    target = tol * (1.0 + np.linalg.norm(F))
    r = burgers_residual(system, alpha, F)
    history = [float(np.linalg.norm(r))]
    it = 0
    while history[-1] > target:
        if it >= max_iters:
            raise ConvergenceError(f"Newton did not converge in {max_iters} iterations, "
                                   f"residual {history[-1]:.3e}", history[-1], it)
        J = system.A - system.tensor.jacobian(alpha)
        alpha = alpha - factorize(J).solve(r)
        r = burgers_residual(system, alpha, F)
        history.append(float(np.linalg.norm(r)))
        it += 1
        if not math.isfinite(history[-1]):
            raise ConvergenceError("Newton iterate diverged", history[-1], it)
    return OracleSolution(alpha, history[-1], it, history)


def solve(system, load, **newton):
    if system.problem.nonlinearity == "burgers":
        return solve_burgers_newton(system, load, **newton)
    return solve_linear(system, load)


# -- refined references ------------------------------------------------------

def subdivide_interval_mesh(mesh, factor):
    """Split every element of a 1D mesh into ``factor`` equal pieces."""
    x = np.sort(mesh.nodes[:, 0])
    t = np.arange(factor) / factor
    fine = (x[:-1, None] + (x[1:] - x[:-1])[:, None] * t).ravel()
    return interval_mesh_from_nodes(np.append(fine, x[-1]))


@dataclass(eq=False)
class ReferenceSolution:
    """Oracle solution on a mesh that is nested in (refines) the coarse one."""

    system: object
    alpha: np.ndarray
    factor: int

    def evaluate(self, points):
        return self.system.evaluate(self.alpha, points)

    def error(self, coarse_system, coarse_coeffs):
        """Absolute and relative L2 errors of a coarse field against this reference."""
        mesh = self.system.mesh
        if mesh.dim == 1:
            bps = np.concatenate([mesh.nodes[:, 0], coarse_system.mesh.nodes[:, 0]])
            err, ref = l2_distance_1d(lambda x: coarse_system.evaluate(coarse_coeffs, x),
                                      self.evaluate, bps)
        else:
            geo = element_geometry(self.system.dofmap, 5)
            pts = geo.points.reshape(-1, 2)
            w = geo.wdet.ravel()
            ref_vals = self.evaluate(pts)
            diff = coarse_system.evaluate(coarse_coeffs, pts) - ref_vals
            err = float(np.sqrt(np.sum(w * diff**2)))
            ref = float(np.sqrt(np.sum(w * ref_vals**2)))
        if ref == 0.0:
            return err, (0.0 if err == 0.0 else math.inf)
        return err, err / ref


def refine_mesh(mesh, factor):
    """Nested refinement by at least ``factor`` in element count."""
    if factor < 1:
        raise InvalidArgumentError("refinement factor must be >= 1")
    if mesh.dim == 1:
        return subdivide_interval_mesh(mesh, factor) if factor > 1 else mesh
    fine = mesh
    while fine.n_elements < factor * mesh.n_elements:
        fine, _ = refine_uniform(fine)
    return fine


def reference_solution(problem, f, mesh, order, factor=32, **newton):
    """Solve on a ``factor``-times refined nested mesh with the same element order."""
    fine = refine_mesh(mesh, factor)
    system = assemble_bilinear(problem, fine, build_dofmap(fine, order))
    sol = solve(system, system.load(f), **newton)
    log.debug("reference: %d elements, %d dofs", fine.n_elements, system.n)
    return ReferenceSolution(system, sol.alpha_star, factor)
