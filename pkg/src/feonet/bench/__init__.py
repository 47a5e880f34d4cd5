from .config import PROBLEMS, ExperimentConfig, dump_config, load_config, parse_config, save_config
from .problems import Setup, build_setup
from .report import HEADER, Check, Report, SlopeFit, emit_report, fit_slope, read_rows
from .studies import (
    evaluate_model,
    layer_width,
    run_benchmark,
    run_convergence_study,
    run_singular_study,
    train_models,
)

__all__ = [
    "Check",
    "ExperimentConfig",
    "HEADER",
    "PROBLEMS",
    "Report",
    "Setup",
    "SlopeFit",
    "build_setup",
    "dump_config",
    "emit_report",
    "evaluate_model",
    "fit_slope",
    "layer_width",
    "load_config",
    "parse_config",
    "read_rows",
    "run_benchmark",
    "run_convergence_study",
    "run_singular_study",
    "save_config",
    "train_models",
]
