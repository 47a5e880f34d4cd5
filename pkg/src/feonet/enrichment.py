"""Boundary-layer corrector enrichment for -eps u'' + b u' = f with b < 0.

The corrector on [a, b] with the layer at the left end (s = x - a,
L = b - a) is

    phi(x) = exp(-s/eps) - (1 - (1 - exp(-L/eps)) s / L),

which vanishes at both ends. On [-1, 1] this is
exp(-(1+x)/eps) - (1 - (1 - exp(-2/eps))(x+1)/2). For a layer at the right
end (b_sign = +1) the coordinate is mirrored.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InvalidArgumentError
from .fem.assembly import AssembledSystem, assemble_bilinear, eval_scalar, eval_vector
from .fem.basis import shape_functions
from .fem.norms import l2_distance_1d, locate_1d
from .fem.quadrature import gauss_legendre
from .mesh import build_dofmap, generate_interval_mesh, interval_mesh_from_nodes
from .oracle import OracleSolution, solve_linear


class EnrichmentWarning(UserWarning):
    pass


def _exp_neg(t):
    """exp(-t) for t >= 0, flushed to zero where it would underflow."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    ok = t < 745.0
    out[ok] = np.exp(-t[ok])
    return out


@dataclass(frozen=True)
class CorrectorBasis:
    epsilon: float
    b_sign: int = -1
    a: float = -1.0
    b: float = 1.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidArgumentError("epsilon must be positive")
        if self.b_sign not in (-1, 1):
            raise InvalidArgumentError("b_sign must be -1 or +1")
        if not self.a < self.b:
            raise InvalidArgumentError("need a < b")

    @property
    def length(self):
        return self.b - self.a

    @property
    def layer_end(self):
        return self.a if self.b_sign < 0 else self.b

    def _s(self, x):
        x = np.asarray(x, dtype=float)
        tol = 1e-12 * self.length
        if np.any(x < self.a - tol) or np.any(x > self.b + tol):
            raise InvalidArgumentError(f"corrector evaluated outside [{self.a}, {self.b}]")
        s = x - self.a if self.b_sign < 0 else self.b - x
        return np.clip(s, 0.0, self.length)

    def tail(self):
        """exp(-L/eps), zero once it underflows."""
        return float(_exp_neg(self.length / self.epsilon))

    def value(self, x):
        s = self._s(x)
        L = self.length
        return _exp_neg(s / self.epsilon) - (1.0 - (1.0 - self.tail()) * s / L)

    def derivative(self, x):
        s = self._s(x)
        ds = np.where(self.b_sign < 0, 1.0, -1.0)
        d = -_exp_neg(s / self.epsilon) / self.epsilon + (1.0 - self.tail()) / self.length
        return ds * d

    def layer_quadrature(self, breakpoints, ratio=1.5, points_per_cell=8):
        """Points and weights on [a, b] graded geometrically away from the layer.

        Cells start at width eps/4 at the layer end and grow by ``ratio``;
        every breakpoint (mesh node) is kept so no cell straddles a kink.
        """
        eps = self.epsilon
        grades = [0.0]
        w = eps / 4
        while grades[-1] < self.length:
            grades.append(grades[-1] + w)
            w *= ratio
        s = np.array(grades[:-1])
        pts = self.a + s if self.b_sign < 0 else self.b - s
        bps = np.unique(np.concatenate([np.asarray(breakpoints, dtype=float), pts, [self.a, self.b]]))
        bps = bps[(bps >= self.a) & (bps <= self.b)]
        t, wt = gauss_legendre(points_per_cell)
        lo, hi = bps[:-1, None], bps[1:, None]
        return (lo + (hi - lo) * t).ravel(), ((hi - lo) * wt).ravel()


def corrector_eval(basis, x):
    return basis.value(x), basis.derivative(x)


def nodal_basis_at(dofmap, x):
    """Nodal basis values and x-derivatives at 1D points: (dofs, vals, ders), each (npts, nb)."""
    mesh = dofmap.mesh
    e, t = locate_1d(mesh, x)
    vals, rgrads = shape_functions(dofmap.order, 1, t)
    ends = mesh.nodes[mesh.elements[e], 0]
    jac = ends[:, 1] - ends[:, 0]
    return dofmap.element_dofs[e], vals, rgrads[:, :, 0] / jac[:, None]


def assemble_enriched(problem, mesh, dofmap, basis, base=None):
    """Append the corrector as one extra trial/test function.

    The leading N(h) x N(h) block is the unenriched matrix, unchanged.
    """
    if mesh.dim != 1:
        raise InvalidArgumentError("corrector enrichment is only implemented in 1D")
    if problem.bc != "dirichlet0" or problem.nonlinearity != "none":
        raise InvalidArgumentError("enrichment needs a linear problem with homogeneous Dirichlet data")
    if basis.epsilon >= 0.1:
        warnings.warn(f"epsilon={basis.epsilon} has no thin layer; enrichment is unnecessary",
                      EnrichmentWarning, stacklevel=2)
    base = assemble_bilinear(problem, mesh, dofmap) if base is None else base
    n = base.n
    xq, wq = basis.layer_quadrature(mesh.nodes[:, 0])
    pts = xq[:, None]
    a = eval_scalar(problem.diffusion, pts)
    bconv = eval_vector(problem.convection, pts)[:, 0]
    c = eval_scalar(problem.reaction, pts)
    pc, dpc = basis.value(xq), basis.derivative(xq)
    dofs, v, dv = nodal_basis_at(dofmap, xq)
    idx = base.dof_index[dofs]                     # -1 on eliminated DOFs
    eps = problem.epsilon
    w = wq[:, None]
    # column: B[phi_cor, phi_i]; row: B[phi_k, phi_cor]
    col = w * (eps * a[:, None] * dpc[:, None] * dv + (bconv * dpc)[:, None] * v + (c * pc)[:, None] * v)
    row = w * (eps * a[:, None] * dv * dpc[:, None] + bconv[:, None] * dv * pc[:, None] + (c * pc)[:, None] * v)
    mcol = w * pc[:, None] * v
    keep = idx >= 0

    def gather(vals):
        out = np.zeros(n)
        np.add.at(out, idx[keep], vals[keep])
        return out

    col_v, row_v, mass_v = gather(col), gather(row), gather(mcol)
    corner = float(np.sum(wq * (eps * a * dpc**2 + bconv * dpc * pc + c * pc**2)))
    mass_corner = float(np.sum(wq * pc**2))
    A = sp.bmat([[base.A, sp.csr_matrix(col_v[:, None])],
                 [sp.csr_matrix(row_v[None, :]), sp.csr_matrix([[corner]])]], format="csr")
    M = sp.bmat([[base.mass, sp.csr_matrix(mass_v[:, None])],
                 [sp.csr_matrix(mass_v[None, :]), sp.csr_matrix([[mass_corner]])]], format="csr")
    L = sp.bmat([[base.load_operator, None],
                 [None, sp.csr_matrix((wq * pc)[None, :])]], format="csr")
    return AssembledSystem(
        problem=problem,
        dofmap=dofmap,
        free_dofs=base.free_dofs,
        A=A,
        mass=M,
        load_points=np.vstack([base.load_points, pts]),
        load_operator=L,
        enrichment=basis,
    )


# -- layer-resolving reference ---------------------------------------------

def shishkin_nodes(a, b, epsilon, N, sigma=3.0, layer="left"):
    """Piecewise-uniform mesh with N/2 cells inside a layer of width
    tau = min((b - a)/2, sigma * eps * ln N)."""
    if N < 2 or N % 2:
        raise InvalidArgumentError("Shishkin mesh needs an even N >= 2")
    L = b - a
    tau = min(L / 2, sigma * epsilon * math.log(N))
    fine = np.linspace(0.0, tau, N // 2 + 1)
    coarse = np.linspace(tau, L, N // 2 + 1)[1:]
    s = np.concatenate([fine, coarse])
    return a + s if layer == "left" else (b - s)[::-1]


@dataclass(eq=False)
class LayerReference:
    system: AssembledSystem
    alpha: np.ndarray

    def evaluate(self, x):
        return self.system.evaluate(self.alpha, np.asarray(x, dtype=float))

    def error(self, system, coeffs):
        bps = np.concatenate([self.system.mesh.nodes[:, 0], system.mesh.nodes[:, 0]])
        return l2_distance_1d(lambda x: system.evaluate(coeffs, x), self.evaluate, bps)


def layer_reference(problem, f, a=-1.0, b=1.0, N=1024, order=2, layer="left"):
    """Oracle solve on a Shishkin mesh fine enough to resolve the layer."""
    mesh = interval_mesh_from_nodes(shishkin_nodes(a, b, problem.epsilon, N, layer=layer))
    system = assemble_bilinear(problem, mesh, build_dofmap(mesh, order))
    return LayerReference(system, solve_linear(system, system.load(f)).alpha_star)


@dataclass
class SingularResult:
    solution: OracleSolution
    system: AssembledSystem
    rel_l2: float
    abs_l2: float
    layer_max_error: float
    u_max: float


def layer_window_error(system, coeffs, reference, width, n_points=201):
    """Max |u_h - u_ref| on the ``width``-wide window at the layer end, and max |u_ref|."""
    basis = system.enrichment
    mesh_a = float(system.mesh.nodes[:, 0].min())
    mesh_b = float(system.mesh.nodes[:, 0].max())
    left = basis is None or basis.b_sign < 0
    xs = np.linspace(mesh_a, mesh_a + width, n_points) if left else np.linspace(mesh_b - width, mesh_b, n_points)
    xs_all = np.linspace(mesh_a, mesh_b, 4001)
    ref_all = reference.evaluate(np.concatenate([xs_all, xs]))
    u_max = float(np.max(np.abs(ref_all)))
    err = float(np.max(np.abs(system.evaluate(coeffs, xs) - reference.evaluate(xs))))
    return err, u_max


def solve_singular(problem, f, enriched=True, K=32, order=1, a=-1.0, b=1.0, reference=None):
    """Coarse oracle solve (optionally enriched) scored against a layer-resolving reference."""
    mesh = generate_interval_mesh(a, b, K)
    dofmap = build_dofmap(mesh, order)
    b_val = float(eval_vector(problem.convection, np.array([[0.5 * (a + b)]]))[0, 0])
    sign = -1 if b_val < 0 else 1
    if enriched:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", EnrichmentWarning)
            system = assemble_enriched(problem, mesh, dofmap, CorrectorBasis(problem.epsilon, sign, a, b))
    else:
        system = assemble_bilinear(problem, mesh, dofmap)
    sol = solve_linear(system, system.load(f))
    if reference is None:
        reference = layer_reference(problem, f, a, b, layer="left" if sign < 0 else "right")
    err, ref = reference.error(system, sol.alpha_star)
    win, umax = layer_window_error(system, sol.alpha_star, reference, 10 * problem.epsilon)
    return SingularResult(sol, system, err / ref, err, win, umax)
