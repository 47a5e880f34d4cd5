"""Command-line entry point: ``feonet <subcommand> [--config FILE] [--out DIR] [--check]``.

Every ExperimentConfig field is also a flag (``m_train`` -> ``--m-train``);
flags override the config file, which overrides the built-in defaults.
Exit status: 0 on success, 1 if ``--check`` is given and a check failed,
2 on bad input.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields
from pathlib import Path

from ..errors import FeonetError
from ..mesh import build_dofmap, load_mesh
from ..opnet import load_checkpoint, save_checkpoint
from .config import ExperimentConfig, dump_config, load_config, parse_value
from .problems import build_setup
from .report import emit_report
from .studies import evaluate_model, run_benchmark, run_convergence_study, run_singular_study, train_models

STUDIES = {"converge": run_convergence_study, "bench": run_benchmark, "singular": run_singular_study}


def _add_config_flags(p):
    p.add_argument("--config", help="key = value experiment file")
    p.add_argument("--out", help="output directory (overrides out_dir)")
    p.add_argument("--check", action="store_true", help="exit 1 if any acceptance check fails")
    p.add_argument("-v", "--verbose", action="store_true")
    for f in fields(ExperimentConfig):
        if f.name == "out_dir":
            continue
        p.add_argument("--" + f.name.replace("_", "-"), dest="cfg_" + f.name, metavar="VALUE")


def build_parser():
    parser = argparse.ArgumentParser(prog="feonet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("converge", "error vs. element count with a fitted slope"),
                           ("bench", "multi-seed training with mean/std test errors"),
                           ("singular", "enriched vs. plain bases for small epsilon"),
                           ("train", "train and write one checkpoint per seed"),
                           ("eval", "score a checkpoint on the test set")):
        p = sub.add_parser(name, help=helptext)
        _add_config_flags(p)
        if name == "eval":
            p.add_argument("--checkpoint", required=True)
    p = sub.add_parser("mesh-info", help="summarize a mesh file or a problem's mesh")
    _add_config_flags(p)
    p.add_argument("--mesh", help="mesh file to inspect")
    return parser


def resolve_config(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    for f in fields(ExperimentConfig):
        text = getattr(args, "cfg_" + f.name, None)
        if text is not None:
            try:
                overrides[f.name] = parse_value(f.name, text)
            except ValueError as exc:
                raise FeonetError(f"--{f.name.replace('_', '-')}: {exc}") from None
    if args.out:
        overrides["out_dir"] = args.out
    return cfg.with_(**overrides) if overrides else cfg


def _finish(report, cfg, args):
    path = emit_report(report, cfg.out_dir)
    Path(cfg.out_dir, f"{report.study}_config.txt").write_text(dump_config(cfg))
    print(f"wrote {path}")
    for k, v in report.summary.items():
        print(f"  {k} = {v}")
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name} {c.detail}")
    return 1 if args.check and not report.passed else 0


def mesh_info(args, cfg):
    if args.mesh:
        mesh = load_mesh(args.mesh)
        order = cfg.order or 1
    else:
        setup = build_setup(cfg)
        mesh, order = setup.mesh, cfg.resolved().order
    meas = mesh.signed_measures()
    print(f"dim {mesh.dim}")
    print(f"nodes {mesh.n_nodes}")
    print(f"elements {mesh.n_elements}")
    print(f"boundary_nodes {len(mesh.boundary_nodes)}")
    if mesh.dim == 2:
        print(f"boundary_edges {len(mesh.boundary_edges)}")
    print(f"h {mesh.h()!r}")
    print(f"measure {float(meas.sum())!r}")
    print(f"min_element_measure {float(meas.min())!r}")
    dm = build_dofmap(mesh, order)
    print(f"P{order}_dofs {dm.n_dofs}")
    print(f"P{order}_interior_dofs {len(dm.interior_dofs)}")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "mesh-info":
            return mesh_info(args, cfg)
        if args.command in STUDIES:
            return _finish(STUDIES[args.command](cfg), cfg, args)
        if args.command == "train":
            report, states = train_models(cfg)
            Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
            for seed, state in states.items():
                save_checkpoint(state, Path(cfg.out_dir) / f"checkpoint_seed{seed}.json")
            return _finish(report, cfg, args)
        state = load_checkpoint(args.checkpoint)
        return _finish(evaluate_model(cfg, state.params, state.params.config.init_seed), cfg, args)
    except (FeonetError, OSError) as exc:
        print(f"feonet: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
