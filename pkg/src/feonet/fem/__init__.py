from .assembly import (
    AssembledSystem,
    BurgersTensor,
    LoadVector,
    ProblemSpec,
    assemble_bilinear,
    assemble_load,
    assemble_mass,
    element_geometry,
    export_triplets,
)
from .basis import reference_basis, shape_functions
from .norms import evaluate_field, l2_distance_1d, l2_norm, l2_rel_error
from .quadrature import gauss_legendre, quadrature_rule

__all__ = [
    "AssembledSystem",
    "BurgersTensor",
    "LoadVector",
    "ProblemSpec",
    "assemble_bilinear",
    "assemble_load",
    "assemble_mass",
    "element_geometry",
    "evaluate_field",
    "export_triplets",
    "gauss_legendre",
    "l2_distance_1d",
    "l2_norm",
    "l2_rel_error",
    "quadrature_rule",
    "reference_basis",
    "shape_functions",
]
