"""Assembly of the Galerkin system for

    -eps div(a grad u) + b . grad u + c u  [+ u u_x]  = f

with homogeneous Dirichlet (DOF elimination) or homogeneous Neumann plus a
unit mass term. All integrals use element-wise quadrature on affine
simplices; assembly is vectorized over elements and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from ..errors import CoefficientError, InvalidArgumentError
from .basis import shape_functions
from .quadrature import MAX_DEGREE, quadrature_rule

Field = Union[float, Callable]

BCS = ("dirichlet0", "neumann0_with_mass")
NONLINEARITIES = ("none", "burgers")


@dataclass(frozen=True)
class ProblemSpec:
    """PDE coefficients. Fields are constants or callables taking one
    coordinate array per dimension (``f(x)`` or ``f(x, y)``)."""

    epsilon: float = 1.0
    diffusion: Field = 1.0
    convection: Union[Field, Sequence[float]] = 0.0
    reaction: Field = 0.0
    nonlinearity: str = "none"
    bc: str = "dirichlet0"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidArgumentError(f"epsilon must be positive, got {self.epsilon}")
        if self.bc not in BCS:
            raise InvalidArgumentError(f"unknown bc {self.bc!r}")
        if self.nonlinearity not in NONLINEARITIES:
            raise InvalidArgumentError(f"unknown nonlinearity {self.nonlinearity!r}")

    def with_(self, **changes):
        from dataclasses import replace
        return replace(self, **changes)


def eval_scalar(fld, pts):
    """Evaluate a scalar field at points of shape (n, dim)."""
    n = pts.shape[0]
    if callable(fld):
        return np.broadcast_to(np.asarray(fld(*pts.T), dtype=float), (n,)).copy()
    return np.full(n, float(fld))


def eval_vector(fld, pts):
    n, dim = pts.shape
    if callable(fld):
        out = fld(*pts.T)
        if dim == 1 and np.ndim(out) <= 1:
            out = [out]
        return np.column_stack([np.broadcast_to(np.asarray(c, dtype=float), (n,)) for c in out])
    arr = np.atleast_1d(np.asarray(fld, dtype=float))
    if arr.size == 1:
        arr = np.repeat(arr, dim)
    if arr.size != dim:
        raise InvalidArgumentError(f"convection needs {dim} components, got {arr.size}")
    return np.broadcast_to(arr, (n, dim)).copy()


@dataclass(frozen=True, eq=False)
class ElementGeometry:
    """Affine element maps sampled at a quadrature rule.

    ``points`` (ne, nq, dim), ``wdet`` (ne, nq), ``values`` (nq, nb),
    ``grads`` (ne, nq, nb, dim) in physical coordinates.
    """

    points: np.ndarray
    wdet: np.ndarray
    values: np.ndarray
    grads: np.ndarray


def element_geometry(dofmap, degree):
    mesh = dofmap.mesh
    dim = mesh.dim
    ref_pts, ref_w = quadrature_rule(dim, degree)
    vals, rgrads = shape_functions(dofmap.order, dim, ref_pts)
    v = mesh.nodes[mesh.elements]                    # (ne, dim+1, dim)
    jac = np.stack([v[:, k + 1] - v[:, 0] for k in range(dim)], axis=2)  # (ne, dim, dim)
    det = np.linalg.det(jac)
    inv = np.linalg.inv(jac)
    points = v[:, 0][:, None, :] + np.einsum("edk,qk->eqd", jac, ref_pts)
    grads = np.einsum("qbk,ekd->eqbd", rgrads, inv)
    wdet = np.abs(det)[:, None] * ref_w[None, :]
    return ElementGeometry(points, wdet, vals, grads)


def default_degree(dim):
    return MAX_DEGREE[dim]


def _scatter(element_dofs, local, n):
    """Sum element matrices (ne, nb, nb) into a CSR matrix, in element order."""
    nb = element_dofs.shape[1]
    rows = np.repeat(element_dofs, nb, axis=1).ravel()
    cols = np.tile(element_dofs, (1, nb)).ravel()
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


class BurgersTensor:
    """Sparse rank-3 tensor T[i, j, k] = int phi_j phi_k d/dx phi_i over free DOFs.

    Stored as coordinate arrays; ``apply`` returns q_i = 1/2 a^T T_i a.
    """

    def __init__(self, i, j, k, values, n):
        self.i, self.j, self.k = (np.asarray(a, dtype=np.int64) for a in (i, j, k))
        self.values = np.asarray(values, dtype=float)
        self.n = n
        nnz = len(self.values)
        self._rows = sp.csr_matrix((np.ones(nnz), (np.arange(nnz), self.i)), shape=(nnz, n))
        self._cols = sp.csr_matrix((np.ones(nnz), (np.arange(nnz), self.k)), shape=(nnz, n))

    def dense(self):
        out = np.zeros((self.n,) * 3)
        np.add.at(out, (self.i, self.j, self.k), self.values)
        return out

    def apply(self, alpha):
        """q(alpha) for alpha of shape (n,) or (M, n)."""
        a = np.atleast_2d(alpha)
        w = self.values * a[:, self.j] * a[:, self.k]
        q = 0.5 * (self._rows.T @ w.T).T
        return q[0] if np.ndim(alpha) == 1 else q

    def jacobian(self, alpha):
        """dq_i/da_k = sum_j T[i, j, k] a_j (uses symmetry in j, k)."""
        vals = self.values * alpha[self.j]
        return sp.coo_matrix((vals, (self.i, self.k)), shape=(self.n, self.n)).tocsr()

    def vjp(self, alpha, r):
        """sum_i r_i dq_i/da_k for batches alpha, r of shape (M, n)."""
        w = self.values * alpha[:, self.j] * r[:, self.i]
        return (self._cols.T @ w.T).T


def _burgers_tensor(dofmap, geo, free_index, n_free):
    vals, grads = geo.values, geo.grads
    # local[e, i, j, k] = sum_q wdet phi_j phi_k d/dx phi_i
    local = np.einsum("eq,eqi,qj,qk->eijk", geo.wdet, grads[..., 0], vals, vals)
    ed = free_index[dofmap.element_dofs]
    nb = ed.shape[1]
    I, J, K = np.meshgrid(np.arange(nb), np.arange(nb), np.arange(nb), indexing="ij")
    gi, gj, gk = ed[:, I.ravel()], ed[:, J.ravel()], ed[:, K.ravel()]
    v = local.reshape(len(ed), -1)
    keep = (gi >= 0) & (gj >= 0) & (gk >= 0)
    gi, gj, gk, v = gi[keep], gj[keep], gk[keep], v[keep]
    key = (gi * n_free + gj) * n_free + gk
    uniq, inv = np.unique(key, return_inverse=True)
    summed = np.zeros(len(uniq))
    np.add.at(summed, inv, v)
    ii, rem = np.divmod(uniq, n_free * n_free)
    jj, kk = np.divmod(rem, n_free)
    return BurgersTensor(ii, jj, kk, summed, n_free)


@dataclass(eq=False)
class AssembledSystem:
    """Galerkin matrices restricted to the free (non-eliminated) DOFs.

    ``load_operator`` maps forcing values at ``load_points`` to the load
    vector: F = load_operator @ f(load_points).
    """

    problem: ProblemSpec
    dofmap: object
    free_dofs: np.ndarray
    A: sp.csr_matrix
    mass: sp.csr_matrix
    load_points: np.ndarray
    load_operator: sp.csr_matrix
    tensor: Optional[BurgersTensor] = None
    enrichment: Optional[object] = None
    extra: dict = field(default_factory=dict)

    @property
    def mesh(self):
        return self.dofmap.mesh

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def n_nodal(self):
        return len(self.free_dofs)

    @property
    def dof_index(self):
        """Global DOF -> row in the free system, -1 where eliminated."""
        idx = np.full(self.dofmap.n_dofs, -1, dtype=np.int64)
        idx[self.free_dofs] = np.arange(len(self.free_dofs))
        return idx

    def load(self, f):
        return self.load_operator @ eval_scalar(f, self.load_points)

    def loads(self, fvals):
        """Batch of load vectors from forcing values (M, n_points) -> (M, n)."""
        return (self.load_operator @ np.asarray(fvals).T).T

    def full_coefficients(self, coeffs):
        """Expand free-DOF coefficients to all nodal DOFs; eliminated ones are 0."""
        coeffs = np.asarray(coeffs)
        out = np.zeros(coeffs.shape[:-1] + (self.dofmap.n_dofs,))
        out[..., self.free_dofs] = coeffs[..., :self.n_nodal]
        return out

    def evaluate(self, coeffs, points):
        """Evaluate the discrete field with free coefficients at physical points."""
        from .norms import evaluate_field
        coeffs = np.asarray(coeffs, dtype=float)
        vals = evaluate_field(self.dofmap, self.full_coefficients(coeffs), points)
        if self.enrichment is not None:
            pts = np.asarray(points, dtype=float).reshape(-1)
            vals = vals + coeffs[..., self.n_nodal:] @ np.atleast_2d(self.enrichment.value(pts))
        return vals


def _check_diffusion(a):
    if np.any(a <= 0):
        raise CoefficientError(f"diffusion coefficient must be positive, min {a.min():.3e}")


def local_matrices(problem, geo, dim):
    """Element matrices [test i, trial j] of the linear bilinear form, plus mass."""
    pts = geo.points.reshape(-1, dim)
    shape = geo.wdet.shape
    a = eval_scalar(problem.diffusion, pts)
    _check_diffusion(a)
    c = eval_scalar(problem.reaction, pts)
    if problem.bc == "neumann0_with_mass":
        c = c + 1.0
    b = eval_vector(problem.convection, pts).reshape(shape + (dim,))
    a = a.reshape(shape)
    c = c.reshape(shape)
    G, V, w = geo.grads, geo.values, geo.wdet
    diff = problem.epsilon * np.einsum("eq,eqid,eqjd->eij", w * a, G, G)
    conv = np.einsum("eq,eqd,eqjd,qi->eij", w, b, G, V)
    react = np.einsum("eq,qi,qj->eij", w * c, V, V)
    mass = np.einsum("eq,qi,qj->eij", w, V, V)
    return diff + conv + react, mass


def assemble_bilinear(problem, mesh, dofmap, degree=None):
    """Assemble A, the mass matrix, the load operator and (Burgers) the tensor T."""
    if dofmap.mesh is not mesh:
        raise InvalidArgumentError("dofmap was built on a different mesh")
    dim = mesh.dim
    degree = default_degree(dim) if degree is None else degree
    geo = element_geometry(dofmap, degree)
    local, local_mass = local_matrices(problem, geo, dim)
    n = dofmap.n_dofs
    A_full = _scatter(dofmap.element_dofs, local, n)
    M_full = _scatter(dofmap.element_dofs, local_mass, n)
    free = dofmap.free_dofs(problem.bc)
    free_index = np.full(n, -1, dtype=np.int64)
    free_index[free] = np.arange(len(free))

    # load operator: rows free DOFs, columns quadrature points (element-major)
    ne, nq = geo.wdet.shape
    nb = geo.values.shape[1]
    rows = np.repeat(dofmap.element_dofs[:, None, :], nq, axis=1)   # (ne, nq, nb)
    cols = np.broadcast_to(np.arange(ne * nq).reshape(ne, nq, 1), rows.shape)
    vals = geo.wdet[:, :, None] * geo.values[None, :, :]
    L_full = sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=(n, ne * nq)).tocsr()

    tensor = None
    if problem.nonlinearity == "burgers":
        if dim != 1:
            raise InvalidArgumentError("Burgers nonlinearity is only available in 1D")
        tensor = _burgers_tensor(dofmap, geo, free_index, len(free))

    return AssembledSystem(
        problem=problem,
        dofmap=dofmap,
        free_dofs=free,
        A=A_full[free][:, free].tocsr(),
        mass=M_full[free][:, free].tocsr(),
        load_points=geo.points.reshape(-1, dim),
        load_operator=L_full[free].tocsr(),
        tensor=tensor,
    )


@dataclass(frozen=True)
class LoadVector:
    F: np.ndarray
    omega: Optional[np.ndarray] = None


def assemble_load(mesh, dofmap, f, bc="dirichlet0", omega=None, degree=None):
    """F_i = int f phi_i over the free DOFs."""
    degree = default_degree(mesh.dim) if degree is None else degree
    geo = element_geometry(dofmap, degree)
    fv = eval_scalar(f, geo.points.reshape(-1, mesh.dim)).reshape(geo.wdet.shape)
    local = np.einsum("eq,qi->ei", geo.wdet * fv, geo.values)
    F = np.zeros(dofmap.n_dofs)
    np.add.at(F, dofmap.element_dofs.ravel(), local.ravel())
    return LoadVector(F[dofmap.free_dofs(bc)], None if omega is None else np.asarray(omega))


def assemble_mass(dofmap, degree=None):
    """Mass matrix over all DOFs."""
    degree = default_degree(dofmap.mesh.dim) if degree is None else degree
    geo = element_geometry(dofmap, degree)
    mass = np.einsum("eq,qi,qj->eij", geo.wdet, geo.values, geo.values)
    return _scatter(dofmap.element_dofs, mass, dofmap.n_dofs)


def export_triplets(matrix, path):
    """Write ``row col value`` lines for debugging."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{r} {c} {v:.17g}\n")
