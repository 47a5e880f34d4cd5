import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import cholesky

from feonet.errors import CoefficientError, InvalidArgumentError
from feonet.fem import (
    ProblemSpec,
    assemble_bilinear,
    assemble_load,
    assemble_mass,
    export_triplets,
    l2_norm,
    l2_rel_error,
    quadrature_rule,
    reference_basis,
    shape_functions,
)
from feonet.mesh import build_dofmap, generate_disk_mesh, generate_interval_mesh, generate_square_mesh
from feonet.oracle import solve_linear


def system_for(problem, mesh, order):
    return assemble_bilinear(problem, mesh, build_dofmap(mesh, order))


# -- basis -----------------------------------------------------------------

def test_p1_midpoint_values():
    vals, _ = reference_basis(1, 1, [0.5])
    assert vals.tolist() == [0.5, 0.5]


def test_p2_left_endpoint_is_nodal():
    vals, _ = reference_basis(2, 1, [0.0])
    assert vals.tolist() == [1.0, 0.0, 0.0]


def test_p2_triangle_barycenter_reproduces_quadratics():
    nodes = np.array([[0, 0], [1, 0], [0, 1], [0.5, 0], [0.5, 0.5], [0, 0.5]], dtype=float)
    bary = np.array([1 / 3, 1 / 3])
    vals, _ = reference_basis(2, 2, bary)
    # standard values: vertices -1/9, midpoints 4/9
    np.testing.assert_allclose(vals, [-1 / 9] * 3 + [4 / 9] * 3, atol=1e-15)
    for mono in (lambda p: p[..., 0] ** 2, lambda p: p[..., 0] * p[..., 1],
                 lambda p: p[..., 1] ** 2, lambda p: p[..., 0], lambda p: 1 + 0 * p[..., 0]):
        assert vals @ mono(nodes) == pytest.approx(float(mono(bary)), abs=1e-15)


@pytest.mark.parametrize("point", [[-0.1], [1.2]])
def test_basis_rejects_points_outside_interval(point):
    with pytest.raises(InvalidArgumentError):
        reference_basis(1, 1, point)


def test_basis_rejects_points_outside_triangle():
    with pytest.raises(InvalidArgumentError):
        reference_basis(2, 2, [0.7, 0.6])


@pytest.mark.parametrize("order,dim", [(1, 1), (2, 1), (1, 2), (2, 2)])
def test_nodal_property(order, dim):
    from feonet.fem.basis import REFERENCE_NODES
    vals, _ = shape_functions(order, dim, REFERENCE_NODES[(order, dim)])
    np.testing.assert_allclose(vals, np.eye(len(vals)), atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.sampled_from([(1, 1), (2, 1), (1, 2), (2, 2)]))
def test_partition_of_unity(u, v, od):
    order, dim = od
    p = [u] if dim == 1 else [u * (1 - v), v * u]  # stays inside the triangle
    vals, grads = reference_basis(order, dim, p)
    assert vals.sum() == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_allclose(grads.sum(axis=0), 0.0, atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_gradients_match_finite_differences(u, v):
    p = np.array([u * (1 - v), v * u])
    _, g = reference_basis(2, 2, p)
    h = 1e-6
    for d in range(2):
        e = np.zeros(2)
        e[d] = h
        fd = (reference_basis(2, 2, p + e)[0] - reference_basis(2, 2, p - e)[0]) / (2 * h)
        np.testing.assert_allclose(g[:, d], fd, atol=1e-8)


# -- quadrature ------------------------------------------------------------

def test_three_point_gauss_quartic():
    pts, w = quadrature_rule(1, 5)
    assert len(w) == 3
    assert w @ pts[:, 0] ** 4 == pytest.approx(0.2, abs=1e-14)


def test_triangle_midpoint_rule_xy():
    pts, w = quadrature_rule(2, 2)
    assert w @ (pts[:, 0] * pts[:, 1]) == pytest.approx(1 / 24, rel=1e-14)


@pytest.mark.parametrize("dim,measure", [(1, 1.0), (2, 0.5)])
def test_weights_sum_to_measure(dim, measure):
    for deg in range(0, {1: 9, 2: 5}[dim] + 1):
        assert quadrature_rule(dim, deg)[1].sum() == pytest.approx(measure, rel=1e-14)


def test_unsupported_degree_rejected():
    with pytest.raises(InvalidArgumentError):
        quadrature_rule(2, 6)
    with pytest.raises(InvalidArgumentError):
        quadrature_rule(1, 10)


def test_interval_rule_exact_for_all_monomials():
    for deg in range(10):
        pts, w = quadrature_rule(1, deg)
        for k in range(deg + 1):
            assert w @ pts[:, 0] ** k == pytest.approx(1 / (k + 1), rel=1e-13)


def test_triangle_rule_exact_for_all_monomials():
    # int x^i y^j over the unit triangle = i! j! / (i + j + 2)!
    for deg in range(6):
        pts, w = quadrature_rule(2, deg)
        for i in range(deg + 1):
            for j in range(deg + 1 - i):
                exact = math.factorial(i) * math.factorial(j) / math.factorial(i + j + 2)
                assert w @ (pts[:, 0] ** i * pts[:, 1] ** j) == pytest.approx(exact, rel=1e-13)


# -- assembly --------------------------------------------------------------

@pytest.mark.parametrize("K", [4, 9])
def test_laplacian_stiffness_is_2k_tridiagonal(K):
    s = system_for(ProblemSpec(), generate_interval_mesh(0, 1, K), 1)
    A = s.A.toarray()
    expected = 2 * K * np.eye(K - 1) - K * (np.eye(K - 1, k=1) + np.eye(K - 1, k=-1))
    np.testing.assert_allclose(A, expected, rtol=1e-13, atol=1e-12)


def test_convection_part_is_antisymmetric():
    mesh = generate_interval_mesh(-1, 1, 16)
    full = system_for(ProblemSpec(epsilon=0.1, convection=-1.0), mesh, 1).A.toarray()
    diff = system_for(ProblemSpec(epsilon=0.1), mesh, 1).A.toarray()
    conv = full - diff
    np.testing.assert_allclose(conv, -conv.T, atol=1e-14)
    np.testing.assert_allclose(diff, diff.T, atol=1e-14)
    assert np.abs(conv).max() > 0.4


def _collapsed_gauss(n):
    """Conical product rule on the unit triangle from Gauss-Legendre in u and v."""
    t, w = np.polynomial.legendre.leggauss(n)
    t, w = 0.5 * (t + 1), 0.5 * w
    U, V = np.meshgrid(t, t, indexing="ij")
    W = np.outer(w, w) * (1 - U)
    return np.column_stack([U.ravel(), ((1 - U) * V).ravel()]), W.ravel()


def _brute_force_matrix(mesh, dm, eps, vel):
    """Loop over elements; Lagrange basis from a per-element Vandermonde solve."""
    ref, rw = _collapsed_gauss(6)
    n = dm.n_dofs
    A = np.zeros((n, n))
    for e, dofs in zip(mesh.elements, dm.element_dofs):
        v = mesh.nodes[e]
        J = np.column_stack([v[1] - v[0], v[2] - v[0]])
        pts = v[0] + ref @ J.T
        w = rw * abs(np.linalg.det(J))
        c = dm.dof_coords[dofs]

        def mono(p):
            x, y = p[:, 0], p[:, 1]
            return np.column_stack([np.ones_like(x), x, y, x * x, x * y, y * y])

        def dmono(p):
            x, y = p[:, 0], p[:, 1]
            z, o = np.zeros_like(x), np.ones_like(x)
            return (np.column_stack([z, o, z, 2 * x, y, z]), np.column_stack([z, z, o, z, x, 2 * y]))

        coef = np.linalg.inv(mono(c))          # columns: basis k in monomial coordinates
        phi = mono(pts) @ coef
        dx, dy = (d @ coef for d in dmono(pts))
        loc = eps * (np.einsum("q,qi,qj->ij", w, dx, dx) + np.einsum("q,qi,qj->ij", w, dy, dy))
        loc += np.einsum("q,qj,qi->ij", w, vel[0] * dx + vel[1] * dy, phi)
        A[np.ix_(dofs, dofs)] += loc
    return A


def test_2d_convection_diffusion_matches_brute_force_loop():
    mesh = generate_square_mesh(4)
    problem = ProblemSpec(epsilon=0.1, convection=(-1.0, 0.0))
    s = system_for(problem, mesh, 2)
    ref = _brute_force_matrix(mesh, s.dofmap, 0.1, (-1.0, 0.0))
    free = s.free_dofs
    np.testing.assert_allclose(s.A.toarray(), ref[np.ix_(free, free)], atol=1e-13)


def test_neumann_adds_mass():
    mesh = generate_interval_mesh(-1, 1, 8)
    dm = build_dofmap(mesh, 2)
    lap = assemble_bilinear(ProblemSpec(bc="neumann0_with_mass"), mesh, dm)
    assert lap.n == 17
    stiff_only = assemble_bilinear(ProblemSpec(reaction=-1.0, bc="neumann0_with_mass"), mesh, dm)
    np.testing.assert_allclose((lap.A - stiff_only.A).toarray(), assemble_mass(dm).toarray(), atol=1e-14)


def test_nonpositive_diffusion_rejected():
    with pytest.raises(CoefficientError):
        system_for(ProblemSpec(diffusion=lambda x: x), generate_interval_mesh(-1, 1, 4), 1)


def test_bad_problem_arguments():
    with pytest.raises(InvalidArgumentError):
        ProblemSpec(epsilon=0.0)
    with pytest.raises(InvalidArgumentError):
        ProblemSpec(bc="robin")


@pytest.mark.parametrize("mesh", [generate_interval_mesh(-1, 1, 12), generate_disk_mesh(1.0, 3)])
@pytest.mark.parametrize("order", [1, 2])
def test_self_adjoint_system_is_spd(mesh, order):
    s = system_for(ProblemSpec(reaction=1.0), mesh, order)
    A = s.A.toarray()
    assert np.abs(A - A.T).max() <= 1e-12 * np.abs(A).max()
    L = cholesky(A, lower=True)
    assert np.all(np.diag(L) > 0)


def test_burgers_tensor_symmetric_in_trial_indices():
    s = system_for(ProblemSpec(nonlinearity="burgers"), generate_interval_mesh(-1, 1, 10), 1)
    T = s.tensor.dense()
    np.testing.assert_allclose(T, np.transpose(T, (0, 2, 1)), atol=1e-15)


def test_burgers_tensor_against_hand_integrals():
    # P1 hats on a uniform grid: T[i][i-1][i-1] = -1/3, T[i][i+1][i+1] = 1/3 ...
    K = 8
    s = system_for(ProblemSpec(nonlinearity="burgers"), generate_interval_mesh(0, 1, K), 1)
    T = s.tensor.dense()
    i = 3
    # on [x_{i-1}, x_i] phi_i' = 1/h; int phi_{i-1}^2 = h/3, int phi_{i-1} phi_i = h/6
    assert T[i, i - 1, i - 1] == pytest.approx(1 / 3, rel=1e-13)
    assert T[i, i + 1, i + 1] == pytest.approx(-1 / 3, rel=1e-13)
    assert T[i, i, i] == pytest.approx(0.0, abs=1e-14)
    assert T[i, i - 1, i] == pytest.approx(1 / 6, rel=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=9, max_size=9))
def test_burgers_apply_and_jacobian_consistent(a):
    s = system_for(ProblemSpec(nonlinearity="burgers"), generate_interval_mesh(-1, 1, 10), 1)
    a = np.array(a)
    T = s.tensor.dense()
    np.testing.assert_allclose(s.tensor.apply(a), 0.5 * np.einsum("ijk,j,k->i", T, a, a), atol=1e-12)
    np.testing.assert_allclose(s.tensor.jacobian(a).toarray() if sp.issparse(s.tensor.jacobian(a))
                               else s.tensor.jacobian(a), np.einsum("ijk,j->ik", T, a), atol=1e-12)


def test_export_triplets(tmp_path):
    s = system_for(ProblemSpec(), generate_interval_mesh(0, 1, 3), 1)
    p = tmp_path / "A.txt"
    export_triplets(s.A, p)
    assert p.read_text().splitlines() == ["0 0 6", "0 1 -3", "1 0 -3", "1 1 6"]


# -- patch test ------------------------------------------------------------

def test_p2_reproduces_quadratic_solution():
    mesh = generate_interval_mesh(-1, 1, 7)
    problem = ProblemSpec(epsilon=0.1, convection=lambda x: x**2 + 1, reaction=lambda x: x)
    s = system_for(problem, mesh, 2)
    # u = 1 - x^2: -0.1 u'' + (x^2+1) u' + x u
    f = lambda x: 0.2 - 2 * x * (x**2 + 1) + x * (1 - x**2)
    alpha = solve_linear(s, s.load(f)).alpha_star
    x = s.dofmap.dof_coords[s.free_dofs, 0]
    np.testing.assert_allclose(alpha, 1 - x**2, atol=1e-10)


def test_p1_nodally_exact_for_constant_forcing():
    mesh = generate_interval_mesh(0, 1, 10)
    s = system_for(ProblemSpec(), mesh, 1)
    alpha = solve_linear(s, s.load(1.0)).alpha_star
    x = s.dofmap.dof_coords[s.free_dofs, 0]
    np.testing.assert_allclose(alpha, x * (1 - x) / 2, atol=1e-12)


# -- loads -----------------------------------------------------------------

def test_zero_forcing_gives_zero_load():
    mesh = generate_interval_mesh(-1, 1, 6)
    assert np.all(assemble_load(mesh, build_dofmap(mesh, 2), 0.0).F == 0)


def test_unit_forcing_p1_load_is_h():
    mesh = generate_interval_mesh(-1, 1, 8)
    F = assemble_load(mesh, build_dofmap(mesh, 1), 1.0).F
    np.testing.assert_allclose(F, 0.25, rtol=1e-14)


def test_trig_load_degree5_vs_degree9():
    mesh = generate_interval_mesh(-1, 1, 32)
    dm = build_dofmap(mesh, 1)
    f = lambda x: 4 * np.sin(3 * x)
    lo = assemble_load(mesh, dm, f, degree=5).F
    hi = assemble_load(mesh, dm, f, degree=9).F
    assert np.max(np.abs(lo - hi)) <= 1e-10


def test_load_operator_matches_assemble_load():
    mesh = generate_square_mesh(3)
    s = system_for(ProblemSpec(), mesh, 2)
    f = lambda x, y: np.sin(2 * x + y)
    np.testing.assert_allclose(s.load(f), assemble_load(mesh, s.dofmap, f).F, atol=1e-15)


# -- norms -----------------------------------------------------------------

def test_norm_of_identical_fields_is_zero():
    mesh = generate_interval_mesh(0, 1, 5)
    M = assemble_mass(build_dofmap(mesh, 2))
    v = np.arange(11.0)
    assert l2_rel_error(v, v, M) == 0.0


def test_constant_field_has_unit_norm():
    mesh = generate_interval_mesh(0, 1, 5)
    M = assemble_mass(build_dofmap(mesh, 2))
    assert l2_norm(np.ones(11), M) == pytest.approx(1.0, rel=1e-14)
    assert M.sum() == pytest.approx(1.0, rel=1e-14)


def test_zero_reference_norm_raises():
    mesh = generate_interval_mesh(0, 1, 5)
    M = assemble_mass(build_dofmap(mesh, 1))
    with pytest.raises(ZeroDivisionError):
        l2_rel_error(np.ones(6), np.zeros(6), M)


def test_rel_error_matches_dense_sampling():
    from feonet.fem import evaluate_field
    mesh = generate_interval_mesh(0, 1, 8)
    dm = build_dofmap(mesh, 2)
    M = assemble_mass(dm)
    rng = np.random.default_rng(3)
    v, w = rng.normal(size=(2, dm.n_dofs))
    N = 400_000
    x = (np.arange(N) + 0.5) / N
    d = evaluate_field(dm, v - w, x[:, None])
    r = evaluate_field(dm, w, x[:, None])
    brute = math.sqrt(np.mean(d**2)) / math.sqrt(np.mean(r**2))
    assert l2_rel_error(v, w, M) == pytest.approx(brute, rel=1e-6)
