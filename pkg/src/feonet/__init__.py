"""Data-free operator learning on finite-element coefficients.

A network maps a sampled input function to Galerkin coefficients and is
trained on the discrete residual alone; a direct FEM solver supplies the
ground truth used for scoring.
"""

from .errors import (
    CoefficientError,
    ConfigError,
    ConvergenceError,
    FeonetError,
    InvalidArgumentError,
    MeshValidationError,
    NumericOverflowError,
    SingularMatrixError,
)

__version__ = "0.1.0"

__all__ = [
    "CoefficientError",
    "ConfigError",
    "ConvergenceError",
    "FeonetError",
    "InvalidArgumentError",
    "MeshValidationError",
    "NumericOverflowError",
    "SingularMatrixError",
]
