"""Concrete PDE setups for each named benchmark problem.

1D problems live on [-1, 1]. The 2D problems solve
-0.1 lap u + v . grad u = f with v = (-1, 0) and homogeneous Dirichlet data.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from importlib import resources

import numpy as np

from ..enrichment import CorrectorBasis, EnrichmentWarning, assemble_enriched
from ..errors import ConfigError
from ..fem import ProblemSpec, assemble_bilinear
from ..fem.assembly import eval_vector
from ..forcing import ForcingFamily
from ..mesh import build_dofmap, generate_disk_mesh, generate_interval_mesh, load_mesh

DOMAIN_FILES = {"domain2": "square_hole.mesh", "domain3": "polygon.mesh"}


@dataclass(eq=False)
class Setup:
    problem: ProblemSpec
    mesh: object
    system: object
    family: ForcingFamily
    enriched: bool = False


def pde(name, epsilon):
    if name.startswith("domain"):
        return ProblemSpec(epsilon=epsilon, convection=(-1.0, 0.0))
    if name == "bc1":
        return ProblemSpec(epsilon=epsilon, convection=-1.0)
    if name == "bc2":
        return ProblemSpec(epsilon=epsilon, convection=-1.0, bc="neumann0_with_mass")
    if name == "eq1":
        return ProblemSpec(epsilon=epsilon, convection=lambda x: x * x + 1.0, reaction=lambda x: x)
    if name == "eq2":
        return ProblemSpec(epsilon=epsilon, nonlinearity="burgers")
    if name == "singular":
        return ProblemSpec(epsilon=epsilon, convection=-1.0)
    raise ConfigError(f"unknown problem {name!r}")


def disk_rings(elements):
    """Ring count whose 6 r^2 triangles come closest to ``elements``."""
    return max(1, round(math.sqrt(elements / 6)))


def build_mesh(config, elements):
    name = config.problem
    if config.mesh_file:
        return load_mesh(config.mesh_file)
    if name == "domain1":
        return generate_disk_mesh(1.0, disk_rings(elements))
    if name in DOMAIN_FILES:
        ref = resources.files("feonet") / "data" / DOMAIN_FILES[name]
        with resources.as_file(ref) as path:
            return load_mesh(path)
    return generate_interval_mesh(-1.0, 1.0, elements)


def build_setup(config, elements=None, epsilon=None, enriched=None):
    """Assemble the system for a resolved config, optionally overriding a few fields."""
    cfg = config.resolved()
    elements = cfg.elements if elements is None else elements
    epsilon = cfg.epsilon if epsilon is None else epsilon
    enriched = cfg.problem == "singular" if enriched is None else enriched
    problem = pde(cfg.problem, epsilon)
    mesh = build_mesh(cfg, elements)
    dofmap = build_dofmap(mesh, cfg.order)
    system = assemble_bilinear(problem, mesh, dofmap)
    if enriched:
        b = -1 if eval_vector(problem.convection, np.zeros((1, 1)))[0, 0] < 0 else 1
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", EnrichmentWarning)
            system = assemble_enriched(problem, mesh, dofmap, CorrectorBasis(epsilon, b), base=system)
    family = ForcingFamily(cfg.defaults.dim, cfg.m_range, cfg.n_range, cfg.input_kind)
    return Setup(problem, mesh, system, family, bool(enriched))

