from .checkpoint import load_checkpoint, save_checkpoint
from .loss import loss_alpha_gradient, loss_gradient, residual_loss, residuals
from .network import (
    NetworkConfig,
    NetworkParams,
    backward,
    forward,
    init_params,
    n_parameters,
    zero_params,
)
from .optim import LBFGS, Adam
from .train import OptimizerConfig, Prediction, TrainState, make_config, predict_solution, rel_l2_errors, train

__all__ = [
    "Adam",
    "LBFGS",
    "NetworkConfig",
    "NetworkParams",
    "OptimizerConfig",
    "Prediction",
    "TrainState",
    "backward",
    "forward",
    "init_params",
    "load_checkpoint",
    "loss_alpha_gradient",
    "loss_gradient",
    "make_config",
    "n_parameters",
    "predict_solution",
    "rel_l2_errors",
    "residual_loss",
    "residuals",
    "save_checkpoint",
    "train",
    "zero_params",
]
