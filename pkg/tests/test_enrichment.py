import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from feonet.bench.problems import pde
from feonet.enrichment import (
    CorrectorBasis,
    EnrichmentWarning,
    assemble_enriched,
    corrector_eval,
    layer_reference,
    shishkin_nodes,
    solve_singular,
)
from feonet.errors import InvalidArgumentError
from feonet.fem import ProblemSpec, assemble_bilinear, l2_distance_1d
from feonet.forcing import ForcingFamily, ForcingSample, SplitMix64
from feonet.mesh import build_dofmap, generate_interval_mesh, generate_square_mesh
from feonet.opnet import NetworkConfig, init_params, predict_solution
from feonet.oracle import solve_linear

EPS = 1e-5

# 50-digit mpmath values of the corrector at x = -1 + t*eps, eps = 1e-5
# (tests/oracles/corrector_values.py).
CORRECTOR_MP = {
    0.5: -0.39346684028935328826,
    1.0: -0.63211555882688344208,
    2.0: -0.86465471676365797059,
    5.0: -0.99323705300091082251,
    10.0: -0.99990460007023747062,
}

# Adaptive-Simpson values for -eps u'' - u' with P1 hats, K = 32 on [-1, 1]
# (same oracle script). Keys are interior DOF indices.
COLUMN_SIMPSON = {0: -0.03124999999999998, 1: -0.031249999999999997,
                  2: -0.031249999999999997, 30: -0.031249999999999997}
ROW_SIMPSON = {0: 0.030930000000000235, 1: 0.03125, 2: 0.03125, 30: 0.031249999999999993}
CORNER_SIMPSON = 0.4999950000000021


def enriched_system(eps=EPS, K=32, order=1):
    mesh = generate_interval_mesh(-1, 1, K)
    dm = build_dofmap(mesh, order)
    problem = pde("singular", eps)
    base = assemble_bilinear(problem, mesh, dm)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EnrichmentWarning)
        enr = assemble_enriched(problem, mesh, dm, CorrectorBasis(eps), base=base)
    return base, enr


# -- corrector -------------------------------------------------------------

@pytest.mark.parametrize("eps", [1e-1, 1e-3, 1e-5])
@pytest.mark.parametrize("sign", [-1, 1])
def test_corrector_vanishes_at_both_ends(eps, sign):
    v = CorrectorBasis(eps, sign).value(np.array([-1.0, 1.0]))
    assert np.max(np.abs(v)) <= 1e-12


def test_endpoint_values_exactly_zero_for_small_eps():
    v, _ = corrector_eval(CorrectorBasis(EPS), np.array([-1.0, 1.0]))
    assert v.tolist() == [0.0, 0.0]


@pytest.mark.parametrize("t", sorted(CORRECTOR_MP))
def test_corrector_matches_extended_precision(t):
    x = -1 + t * EPS
    assert float(CorrectorBasis(EPS).value(x)) == pytest.approx(CORRECTOR_MP[t], rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.999, 0.999), st.sampled_from([1e-1, 1e-2, 0.3]), st.sampled_from([-1, 1]))
def test_derivative_matches_finite_difference(x, eps, sign):
    c = CorrectorBasis(eps, sign)
    h = 1e-7
    fd = (c.value(x + h) - c.value(x - h)) / (2 * h)
    assert float(c.derivative(x)) == pytest.approx(float(fd), rel=1e-5, abs=1e-6)


@pytest.mark.parametrize("eps", [1e-2, 1e-3, 1e-5])
def test_peak_sits_within_eps_log_eps_of_layer(eps):
    c = CorrectorBasis(eps)
    s = np.concatenate([np.linspace(0, 40 * eps * abs(math.log(eps)), 20001), np.linspace(0, 2, 2001)])
    x = -1 + np.clip(s, 0, 2)
    peak = s[np.argmax(np.abs(c.value(x)))]
    assert peak <= 2 * eps * abs(math.log(eps))
    # stationary point of exp(-s/eps) - 1 + s/2
    assert peak == pytest.approx(eps * math.log(2 / eps), rel=1e-2)


def test_mirrored_corrector():
    left, right = CorrectorBasis(1e-3, -1), CorrectorBasis(1e-3, 1)
    x = np.linspace(-1, 1, 101)
    np.testing.assert_allclose(right.value(x), left.value(-x), atol=1e-15)


def test_corrector_domain_checks():
    c = CorrectorBasis(EPS)
    with pytest.raises(InvalidArgumentError):
        c.value(1.5)
    with pytest.raises(InvalidArgumentError):
        CorrectorBasis(0.0)
    with pytest.raises(InvalidArgumentError):
        CorrectorBasis(1e-3, 0)


def test_tail_underflows_to_zero():
    assert CorrectorBasis(1e-3).tail() == 0.0
    assert CorrectorBasis(1.0).tail() == pytest.approx(math.exp(-2))


def test_layer_quadrature_resolves_exponential():
    c = CorrectorBasis(EPS)
    x, w = c.layer_quadrature(np.linspace(-1, 1, 33))
    assert w.sum() == pytest.approx(2.0, rel=1e-14)
    assert np.sum(w * np.exp(-(x + 1) / EPS)) == pytest.approx(EPS * (1 - math.exp(-2 / EPS)), rel=1e-12)


# -- enriched assembly -----------------------------------------------------

def test_leading_block_is_bit_identical():
    base, enr = enriched_system()
    assert enr.n == base.n + 1
    assert np.array_equal(enr.A[:base.n, :base.n].toarray(), base.A.toarray())
    assert np.array_equal(enr.mass[:base.n, :base.n].toarray(), base.mass.toarray())


def test_corner_entry_is_positive():
    _, enr = enriched_system()
    assert enr.A[-1, -1] > 0


@pytest.mark.parametrize("i", sorted(COLUMN_SIMPSON))
def test_entries_match_adaptive_simpson(i):
    _, enr = enriched_system()
    n = enr.n - 1
    assert enr.A[i, n] == pytest.approx(COLUMN_SIMPSON[i], rel=1e-8)
    assert enr.A[n, i] == pytest.approx(ROW_SIMPSON[i], rel=1e-8)


def test_corner_matches_adaptive_simpson():
    _, enr = enriched_system()
    assert enr.A[-1, -1] == pytest.approx(CORNER_SIMPSON, rel=1e-8)


def test_enriched_mass_is_spd():
    _, enr = enriched_system()
    np.linalg.cholesky(enr.mass.toarray())


def test_weak_layer_warns():
    mesh = generate_interval_mesh(-1, 1, 8)
    with pytest.warns(EnrichmentWarning):
        assemble_enriched(pde("singular", 0.1), mesh, build_dofmap(mesh, 1), CorrectorBasis(0.1))


def test_enrichment_rejects_2d_and_nonlinear():
    mesh = generate_square_mesh(2)
    with pytest.raises(InvalidArgumentError):
        assemble_enriched(ProblemSpec(), mesh, build_dofmap(mesh, 1), CorrectorBasis(EPS))
    mesh = generate_interval_mesh(-1, 1, 8)
    with pytest.raises(InvalidArgumentError):
        assemble_enriched(pde("eq2", 1.0), mesh, build_dofmap(mesh, 1), CorrectorBasis(EPS))


def test_enriched_residual_contract():
    _, enr = enriched_system()
    F = enr.load(lambda x: 4 * np.sin(3 * x) + 3 * np.cos(x))
    sol = solve_linear(enr, F)
    assert np.linalg.norm(enr.A @ sol.alpha_star - F) <= 1e-10 * (1 + np.linalg.norm(F))


# -- singular solves -------------------------------------------------------

def test_shishkin_nodes():
    x = shishkin_nodes(-1, 1, EPS, 16)
    assert len(x) == 17 and x[0] == -1 and x[-1] == 1
    tau = 3 * EPS * math.log(16)
    assert x[8] == pytest.approx(-1 + tau, rel=1e-14)
    assert np.all(np.diff(x) > 0)
    with pytest.raises(InvalidArgumentError):
        shishkin_nodes(-1, 1, EPS, 15)


def test_unit_forcing_contrast():
    p = pde("singular", EPS)
    enr = solve_singular(p, 1.0, enriched=True)
    plain = solve_singular(p, 1.0, enriched=False)
    assert enr.rel_l2 <= 2e-2
    assert plain.rel_l2 >= 0.1
    assert enr.layer_max_error <= 5e-2 * enr.u_max
    assert plain.layer_max_error >= 0.5 * plain.u_max


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1e-3, 1e-4, 1e-5]))
def test_enrichment_never_hurts_for_thin_layers(seed, eps):
    fam = ForcingFamily()
    f = ForcingSample(fam.draw(SplitMix64(seed), 1)[0], fam)
    p = pde("singular", eps)
    ref = layer_reference(p, f)
    enr = solve_singular(p, f, True, reference=ref)
    plain = solve_singular(p, f, False, reference=ref)
    assert enr.rel_l2 <= plain.rel_l2


def test_weak_layer_agreement():
    fam = ForcingFamily()
    for w in fam.draw(SplitMix64(1), 3):
        f = ForcingSample(w, fam)
        p = pde("singular", 0.1)
        e, u = solve_singular(p, f, True), solve_singular(p, f, False)
        assert abs(e.rel_l2 - u.rel_l2) <= 0.1


def test_enriched_prediction_carries_corrector_weight():
    _, enr = enriched_system()
    p = init_params(NetworkConfig(enr.n_nodal, enr.n, hidden_layers=(4,), zero_output_init=False))
    pred = predict_solution(p, enr, np.ones((3, enr.n_nodal)))
    assert pred.free.shape == (3, enr.n_nodal + 1)
    assert pred.corrector.shape == (3, 1)
    assert np.all(pred.full[:, enr.dofmap.boundary_dofs] == 0.0)
    # the evaluated field still vanishes at the ends
    assert np.max(np.abs(enr.evaluate(pred.free, np.array([-1.0, 1.0])))) <= 1e-12


# -- composite asymptotics -------------------------------------------------

def test_composite_expansion_first_order_for_cosine_forcing():
    # -eps u'' - u' = cos on (0, 1): u0 = sin(1) - sin(x), phi = -u0(0) exp(-x/eps).
    # The O(eps) outer correction is visible here, unlike for constant f.
    eps_list = [1e-2, 1e-3, 1e-4]
    u0 = lambda x: math.sin(1) - np.sin(x)
    e1, e2 = [], []
    for eps in eps_list:
        ref = layer_reference(ProblemSpec(epsilon=eps, convection=-1.0), np.cos, 0.0, 1.0)
        bps = ref.system.mesh.nodes[:, 0]
        e1.append(l2_distance_1d(lambda x: u0(x) - u0(0.0) * np.exp(-x / eps), ref.evaluate, bps)[0])
        e2.append(l2_distance_1d(u0, ref.evaluate, bps)[0])
    le = np.log(eps_list)
    assert np.polyfit(le, np.log(e1), 1)[0] >= 0.9
    assert np.polyfit(le, np.log(e2), 1)[0] >= 0.45
    assert all(a <= 2 * eps for a, eps in zip(e1, eps_list))
