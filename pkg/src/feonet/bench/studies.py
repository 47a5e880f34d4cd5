"""Convergence, benchmark and singular-perturbation studies."""

from __future__ import annotations

import logging
import math
import time

import numpy as np

from ..enrichment import layer_reference, layer_window_error
from ..errors import FeonetError, InvalidArgumentError
from ..fem import assemble_bilinear
from ..forcing import ForcingSample, build_dataset
from ..mesh import build_dofmap
from ..opnet import OptimizerConfig, forward, make_config, rel_l2_errors, train
from ..oracle import ReferenceSolution, refine_mesh, solve, solve_linear
from .problems import build_setup
from .report import Report, fit_slope

log = logging.getLogger(__name__)


# -- building blocks -------------------------------------------------------

def datasets(cfg, setup):
    s = setup.system
    train_ds = build_dataset(setup.family, cfg.m_train, cfg.train_data_seed, s, "train")
    test_ds = build_dataset(setup.family, cfg.m_test, cfg.test_data_seed, s, "test")
    return train_ds, test_ds


def oracle_coefficients(setup, ds):
    """Oracle alpha* for every sample in ``ds`` (M, n)."""
    if len(ds) == 0:
        return np.zeros((0, setup.system.n))
    if ds.systems is not None:
        return np.array([solve(s, F).alpha_star for s, F in zip(ds.systems, ds.loads)])
    if setup.system.tensor is not None:
        return np.array([solve(setup.system, F).alpha_star for F in ds.loads])
    return solve_linear(setup.system, ds.loads).alpha_star


def train_network(cfg, setup, train_ds, seed):
    net = make_config(setup.system, train_ds, hidden_layers=cfg.hidden_layers, activation=cfg.activation,
                      final_activation=cfg.final_activation, input_encoding=cfg.input_encoding,
                      init_seed=seed)
    net = net.with_(input_scale=net.input_scale * cfg.input_gain)
    oc = OptimizerConfig(name=cfg.optimizer, epochs=cfg.epochs, lr=cfg.lr, lbfgs_steps=cfg.lbfgs_steps,
                         shuffle_seed=seed)
    return train(net, setup.system, train_ds, oc)


def predict(params, setup, ds):
    return forward(params, ds.encode(params.config.input_encoding, setup.system))


def mean_rel_error(setup, predicted, reference):
    if len(reference) == 0:
        return math.nan
    return float(np.mean(rel_l2_errors(setup.system, predicted, reference)))


def reference_errors(cfg, setup, ds, coeffs):
    """Relative L2 errors of coefficient rows against refined-mesh references."""
    if setup.enriched or cfg.problem == "singular":
        return layer_errors(setup, ds, coeffs)[0]
    fine = refine_mesh(setup.mesh, cfg.reference_factor)
    dofmap = build_dofmap(fine, cfg.order)
    errs = []
    if ds.systems is None:
        fs = assemble_bilinear(setup.problem, fine, dofmap)
        fvals = setup.family.evaluate(ds.omegas, fs.load_points)
        loads = fs.loads(fvals)
        alphas = (solve_linear(fs, loads).alpha_star if fs.tensor is None
                  else [solve(fs, F).alpha_star for F in loads])
        for a, c in zip(alphas, coeffs):
            errs.append(ReferenceSolution(fs, a, cfg.reference_factor).error(setup.system, c)[1])
    else:
        for w, c in zip(ds.omegas, coeffs):
            p = setup.problem.with_(reaction=ForcingSample(w, setup.family))
            fs = assemble_bilinear(p, fine, dofmap)
            a = solve(fs, fs.load(1.0)).alpha_star
            errs.append(ReferenceSolution(fs, a, cfg.reference_factor).error(setup.system, c)[1])
    return np.array(errs)


def layer_errors(setup, ds, coeffs, references=None):
    """(rel L2 errors, window errors / |u|_inf) against Shishkin-mesh references."""
    refs = references or layer_references(setup, ds)
    rel, win = [], []
    eps = setup.problem.epsilon
    for ref, c in zip(refs, coeffs):
        err, norm = ref.error(setup.system, c)
        w, umax = layer_window_error(setup.system, c, ref, 10 * eps)
        rel.append(err / norm)
        win.append(w / umax)
    return np.array(rel), np.array(win)


def layer_references(setup, ds):
    fam = setup.family
    return [layer_reference(setup.problem, ForcingSample(w, fam)) for w in ds.omegas]


def layer_width(reference, a=-1.0, b=1.0):
    """Distance from x = a at which |u'| has decayed to 1/e of its wall value."""
    L = b - a
    s = np.concatenate([[0.0], np.geomspace(1e-10 * L, L / 2, 4000)])
    u = reference.evaluate(a + s)
    g = np.abs(np.diff(u) / np.diff(s))
    below = np.flatnonzero(g <= g[0] / math.e)
    mid = 0.5 * (s[1:] + s[:-1])
    return float(mid[below[0]]) if below.size else float(L / 2)


def _base_row(cfg, setup, mode, seed=""):
    mesh = setup.mesh
    return dict(problem=cfg.problem, mode=mode, epsilon=setup.problem.epsilon, enriched=setup.enriched,
                elements=mesh.n_elements, h=mesh.h(), order=cfg.order, dofs=setup.system.n,
                m_train=cfg.m_train if mode == "feonet" else 0, m_test=cfg.m_test,
                reference_factor=cfg.reference_factor, seed=seed)


# -- studies ---------------------------------------------------------------

def run_convergence_study(config):
    """Error against refined references at each element count, plus the fitted slope."""
    cfg = config.resolved()
    if len(cfg.element_counts) < 3 or min(cfg.element_counts) < 4:
        raise InvalidArgumentError("a convergence study needs >= 3 element counts, each >= 4")
    if cfg.defaults.dim != 1 and cfg.problem != "domain1":
        raise InvalidArgumentError(f"{cfg.problem} is read from a fixed mesh file; no resolution sweep")
    report = Report("converge")
    seed = cfg.seeds[0]
    ok_elems, ok_errs = [], []
    for K in cfg.element_counts:
        t0 = time.perf_counter()
        setup = build_setup(cfg, elements=K)
        row = _base_row(cfg, setup, cfg.mode, seed if cfg.mode == "feonet" else "")
        train_ds, test_ds = datasets(cfg, setup)
        try:
            if cfg.mode == "oracle":
                coeffs = oracle_coefficients(setup, test_ds)
            else:
                state = train_network(cfg, setup, train_ds, seed)
                coeffs = predict(state.params, setup, test_ds)
                row.update(train_loss=state.best_loss)
        except FeonetError as exc:
            report.add_row(**row, status=f"failed: {exc}")
            report.timings.append((f"K={K}", time.perf_counter() - t0))
            continue
        err = float(np.mean(reference_errors(cfg, setup, test_ds, coeffs)))
        report.add_row(**row, test_rel_l2=err, status="ok")
        report.timings.append((f"K={K}", time.perf_counter() - t0))
        ok_elems.append(setup.mesh.n_elements)
        ok_errs.append(err)

    expected = -(cfg.order + 1) / cfg.defaults.dim
    if cfg.mode == "oracle":
        fit_e, fit_r = ok_elems, ok_errs
        tol = 0.15 if cfg.order == 1 else 0.2
        lo, hi = expected - tol, expected + tol
    else:
        keep = [i for i, e in enumerate(ok_errs) if e > cfg.error_floor]
        fit_e, fit_r = [ok_elems[i] for i in keep], [ok_errs[i] for i in keep]
        lo, hi = expected - 0.3, expected + 0.4
    report.summary["expected_slope"] = expected
    if len(fit_e) >= 3:
        fit = fit_slope(fit_e, fit_r)
        report.summary.update(slope=fit.slope, slope_residual=fit.residual, slope_points=len(fit_e))
        report.check("slope", lo <= fit.slope <= hi, f"{fit.slope:.3f} in [{lo:.2f}, {hi:.2f}]")
    else:
        report.summary.update(slope=math.nan, slope_residual=math.nan, slope_points=len(fit_e))
        report.check("slope", False, f"only {len(fit_e)} resolutions usable for the fit")
    return report


def run_benchmark(config):
    """Train with each seed; rows per seed plus mean/std of the errors in the summary."""
    cfg = config.resolved()
    report = Report("bench")
    setup = build_setup(cfg)
    train_ds, test_ds = datasets(cfg, setup)
    t0 = time.perf_counter()
    a_train = oracle_coefficients(setup, train_ds)
    a_test = oracle_coefficients(setup, test_ds)
    report.timings.append(("oracle", time.perf_counter() - t0))

    if cfg.mode == "oracle":
        errs = reference_errors(cfg, setup, test_ds, a_test)
        report.add_row(**_base_row(cfg, setup, "oracle"), test_rel_l2=float(np.mean(errs)), status="ok")
        report.summary.update(mean_test_rel_l2=float(np.mean(errs)), std_test_rel_l2=float(np.std(errs)))
        return report

    tr_errs, te_errs = [], []
    for seed in cfg.seeds:
        t0 = time.perf_counter()
        row = _base_row(cfg, setup, "feonet", seed)
        try:
            state = train_network(cfg, setup, train_ds, seed)
        except FeonetError as exc:
            report.add_row(**row, status=f"failed: {exc}")
            report.timings.append((f"seed={seed}", time.perf_counter() - t0))
            continue
        e_tr = mean_rel_error(setup, predict(state.params, setup, train_ds), a_train)
        e_te = mean_rel_error(setup, predict(state.params, setup, test_ds), a_test)
        report.add_row(**row, train_loss=state.best_loss, train_rel_l2=e_tr, test_rel_l2=e_te, status="ok")
        report.timings.append((f"seed={seed}", time.perf_counter() - t0))
        tr_errs.append(e_tr)
        te_errs.append(e_te)

    report.check("all_seeds_trained", len(te_errs) == len(cfg.seeds))
    if te_errs:
        mtr, mte = float(np.mean(tr_errs)), float(np.mean(te_errs))
        gap = (mte - mtr) / mtr if mtr > 0 else math.inf
        report.summary.update(mean_train_rel_l2=mtr, std_train_rel_l2=float(np.std(tr_errs)),
                              mean_test_rel_l2=mte, std_test_rel_l2=float(np.std(te_errs)),
                              gap_ratio=gap)
        if cfg.test_threshold is not None:
            report.check("mean_test_rel_l2", mte <= cfg.test_threshold, f"{mte:.4g} <= {cfg.test_threshold}")
        report.check("gap_ratio", gap <= cfg.gap_ratio_max, f"{gap:.3f} <= {cfg.gap_ratio_max}")
    return report


STRONG_LAYER = 1e-4
WEAK_LAYER = 0.1


def run_singular_study(config):
    """Oracle (and FEONet) errors for each (epsilon, enriched) cell against layer-resolving references."""
    cfg = config.resolved()
    if cfg.defaults.dim != 1:
        raise InvalidArgumentError("singular studies are 1D")
    report = Report("singular")
    seed = cfg.seeds[0]
    widths = []
    cells = {}
    for eps in cfg.epsilons:
        refs = None
        for enriched in cfg.enriched:
            t0 = time.perf_counter()
            setup = build_setup(cfg, epsilon=eps, enriched=enriched)
            train_ds, test_ds = datasets(cfg, setup)
            if refs is None:
                refs = layer_references(setup, test_ds)
                widths.append(layer_width(refs[0]) if refs else math.nan)
            width = widths[-1]
            a_test = oracle_coefficients(setup, test_ds)
            rel, win = layer_errors(setup, test_ds, a_test, refs)
            report.add_row(**_base_row(cfg, setup, "oracle"), test_rel_l2=float(np.mean(rel)),
                           layer_error=float(np.max(win)), layer_width=width, status="ok")
            cells[(eps, enriched, "oracle")] = (float(np.mean(rel)), float(np.max(win)))
            if cfg.mode == "feonet":
                row = _base_row(cfg, setup, "feonet", seed)
                try:
                    state = train_network(cfg, setup, train_ds, seed)
                except FeonetError as exc:
                    report.add_row(**row, status=f"failed: {exc}")
                else:
                    a_train = oracle_coefficients(setup, train_ds)
                    p_test = predict(state.params, setup, test_ds)
                    rel_n, win_n = layer_errors(setup, test_ds, p_test, refs)
                    e_tr = mean_rel_error(setup, predict(state.params, setup, train_ds), a_train)
                    report.add_row(**row, train_loss=state.best_loss, train_rel_l2=e_tr,
                                   test_rel_l2=float(np.mean(rel_n)), layer_error=float(np.max(win_n)),
                                   layer_width=width, status="ok")
                    cells[(eps, enriched, "feonet")] = (float(np.mean(rel_n)), float(np.max(win_n)))
            report.timings.append((f"eps={eps!r},enriched={enriched}", time.perf_counter() - t0))

    for (eps, enriched, mode), (rel, win) in sorted(cells.items(), key=lambda kv: (-kv[0][0], kv[0][1:])):
        tag = f"{mode}:eps={eps!r}:{'enriched' if enriched else 'plain'}"
        report.summary[f"{tag}:rel_l2"] = rel
        report.summary[f"{tag}:layer_error"] = win
        if eps <= STRONG_LAYER:
            if enriched and mode == "oracle":
                report.check(f"{tag}:rel_l2", rel <= 2e-2, f"{rel:.4g} <= 0.02")
            elif enriched:
                thr = cfg.test_threshold if cfg.test_threshold is not None else 5e-2
                report.check(f"{tag}:rel_l2", rel <= thr, f"{rel:.4g} <= {thr}")
                report.check(f"{tag}:layer_error", win <= 5e-2, f"{win:.4g} <= 0.05")
            else:
                report.check(f"{tag}:rel_l2", rel >= 1e-1, f"{rel:.4g} >= 0.1")
    for eps in cfg.epsilons:
        for mode in ("oracle", "feonet"):
            pair = cells.get((eps, True, mode)), cells.get((eps, False, mode))
            if eps >= WEAK_LAYER and all(pair):
                diff = abs(pair[0][0] - pair[1][0])
                report.check(f"{mode}:eps={eps!r}:weak_layer_agreement", diff <= 0.1,
                             f"|{pair[0][0]:.4g} - {pair[1][0]:.4g}| <= 0.1")
    order = np.argsort(cfg.epsilons)[::-1]
    report.summary["layer_widths"] = " ".join(repr(widths[i]) for i in order)
    if len(widths) >= 2:
        w = [widths[i] for i in order]
        report.check("layer_width_monotone", all(x > y for x, y in zip(w, w[1:])),
                     "width shrinks as epsilon decreases")
    return report


# -- single-model helpers for the train/eval subcommands ------------------

def train_models(config):
    """Train one model per seed; returns (report, {seed: TrainState})."""
    cfg = config.resolved()
    report = Report("train")
    setup = build_setup(cfg)
    train_ds, _ = datasets(cfg, setup)
    a_train = oracle_coefficients(setup, train_ds)
    states = {}
    for seed in cfg.seeds:
        t0 = time.perf_counter()
        state = train_network(cfg, setup, train_ds, seed)
        e_tr = mean_rel_error(setup, predict(state.params, setup, train_ds), a_train)
        report.add_row(**_base_row(cfg, setup, "feonet", seed), train_loss=state.best_loss,
                       train_rel_l2=e_tr, status="ok")
        report.timings.append((f"seed={seed}", time.perf_counter() - t0))
        states[seed] = state
    return report, states


def evaluate_model(config, params, seed=""):
    cfg = config.resolved()
    report = Report("eval")
    setup = build_setup(cfg)
    if params.config.output_dim != setup.system.n:
        raise InvalidArgumentError(
            f"checkpoint emits {params.config.output_dim} coefficients, {cfg.problem} needs {setup.system.n}")
    _, test_ds = datasets(cfg, setup)
    t0 = time.perf_counter()
    e_te = mean_rel_error(setup, predict(params, setup, test_ds), oracle_coefficients(setup, test_ds))
    report.add_row(**_base_row(cfg, setup, "feonet", seed), test_rel_l2=e_te, status="ok")
    report.timings.append(("eval", time.perf_counter() - t0))
    report.summary["mean_test_rel_l2"] = e_te
    return report
