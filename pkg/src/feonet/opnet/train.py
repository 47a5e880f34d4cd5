"""Training loop and solution reconstruction for the operator network."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from ..errors import InvalidArgumentError, NumericOverflowError
from .loss import loss_gradient, residual_loss
from .network import NetworkConfig, NetworkParams, forward, init_params
from .optim import LBFGS, Adam

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimizerConfig:
    """``name`` is adam, lbfgs, or adam_lbfgs (Adam epochs, then L-BFGS steps)."""

    name: str = "adam"
    epochs: int = 2000
    lr: float = 1e-3
    lr_final: Optional[float] = None
    lbfgs_steps: int = 0
    lbfgs_max_iter: int = 10
    lbfgs_history: int = 10
    lbfgs_tolerance: float = 1e-15
    batch_size: Optional[int] = None
    tolerance: float = 0.0
    shuffle_seed: int = 0

    def __post_init__(self):
        if self.name not in ("adam", "lbfgs", "adam_lbfgs"):
            raise InvalidArgumentError(f"unknown optimizer {self.name!r}")


@dataclass(eq=False)
class TrainState:
    params: NetworkParams
    optimizer_state: dict
    epoch: int
    loss_history: list
    config: NetworkConfig
    optimizer_config: OptimizerConfig
    best_loss: float = math.inf
    extra: dict = field(default_factory=dict)

    @property
    def best_so_far(self):
        return np.minimum.accumulate(np.asarray(self.loss_history))


def make_config(system, dataset, **overrides):
    """Network config sized for ``system``; inputs are scaled to unit RMS."""
    encoding = overrides.get("input_encoding", "f_at_dofs")
    x = dataset.encode(encoding, system)
    rms = float(np.sqrt(np.mean(x * x))) if x.size else 1.0
    base = dict(input_dim=x.shape[1], output_dim=system.n, input_encoding=encoding,
                input_scale=1.0 / rms if rms > 0 else 1.0)
    base.update(overrides)
    return NetworkConfig(**base)


def _batches(M, batch_size, rng):
    if not batch_size or batch_size >= M:
        yield np.arange(M)
        return
    perm = rng.permutation(M)
    for start in range(0, M, batch_size):
        yield perm[start:start + batch_size]


def train(config, system, dataset, optimizer_config=OptimizerConfig(), params=None):
    """Minimize the residual loss over ``dataset``; returns the best parameters seen."""
    M = len(dataset)
    if M == 0:
        raise InvalidArgumentError("training dataset is empty")
    if config.output_dim != system.n:
        raise InvalidArgumentError(f"network emits {config.output_dim} coefficients, system has {system.n}")
    oc = optimizer_config
    inputs = dataset.encode(config.input_encoding, system)
    loads = dataset.loads
    systems = dataset.systems
    params = init_params(config) if params is None else params.copy()
    rng = np.random.Generator(np.random.PCG64(oc.shuffle_seed))
    history = []
    best = (math.inf, params.flat.copy())

    def closure_for(idx, epoch):
        sub = None if systems is None else [systems[i] for i in idx]

        def fun_grad(flat):
            p = NetworkParams(config, flat)
            return loss_gradient(p, inputs[idx], system, loads[idx], sub, epoch)
        return fun_grad

    def full_loss():
        return residual_loss(forward(params, inputs), system, loads, systems)

    phases = []
    if oc.name in ("adam", "adam_lbfgs"):
        phases.append(("adam", oc.epochs))
    if oc.name == "lbfgs":
        phases.append(("lbfgs", oc.epochs))
    elif oc.name == "adam_lbfgs":
        phases.append(("lbfgs", oc.lbfgs_steps))

    epoch = 0
    opt_state = {}
    stop = False
    for name, steps in phases:
        if stop:
            break
        if name == "adam":
            opt = Adam(lr=oc.lr)
            decay = (oc.lr_final / oc.lr) ** (1.0 / max(steps, 1)) if oc.lr_final else 1.0
            batch_size = oc.batch_size
        else:
            opt = LBFGS(max_iter=oc.lbfgs_max_iter, history_size=oc.lbfgs_history,
                        tolerance_grad=oc.lbfgs_tolerance, tolerance_change=oc.lbfgs_tolerance)
            decay, batch_size = 1.0, None
        minibatch = bool(batch_size) and batch_size < M
        for _ in range(steps):
            prev = params.flat.copy()
            if minibatch:
                loss = full_loss()
                for idx in _batches(M, batch_size, rng):
                    opt.step(params.flat, closure_for(idx, epoch))
            else:
                # closure loss is evaluated at the pre-step parameters
                loss = opt.step(params.flat, closure_for(np.arange(M), epoch))
            if name == "adam":
                opt.lr *= decay
            history.append(loss)
            if loss < best[0]:
                best = (loss, prev)
            epoch += 1
            if loss < oc.tolerance:
                stop = True
                break
        opt_state[name] = opt.state()

    final = full_loss()
    if not np.isfinite(final):
        raise NumericOverflowError(f"non-finite loss after epoch {epoch}", epoch)
    if final < best[0]:
        best = (final, params.flat.copy())
    log.info("trained %d epochs, best loss %.3e", epoch, best[0])
    return TrainState(NetworkParams(config, best[1]), opt_state, epoch, history, config, oc,
                      best_loss=float(best[0]))


@dataclass(frozen=True)
class Prediction:
    """Predicted coefficients: free (N(h) nodal [+ corrector]) and full nodal field."""

    free: np.ndarray
    full: np.ndarray
    corrector: Optional[np.ndarray] = None


def predict_solution(params, system, inputs):
    """Forward pass expanded to all nodal DOFs; eliminated DOFs are exactly zero."""
    alpha = forward(params, inputs)
    if alpha.shape[-1] != system.n:
        raise InvalidArgumentError(f"network emits {alpha.shape[-1]} coefficients, system has {system.n}")
    full = system.full_coefficients(alpha)
    cor = alpha[..., system.n_nodal:] if system.n > system.n_nodal else None
    return Prediction(alpha, full, cor)


def rel_l2_errors(system, predicted, reference):
    """Per-sample relative L2 errors of free-DOF coefficient batches via the mass matrix."""
    d = np.atleast_2d(predicted) - np.atleast_2d(reference)
    r = np.atleast_2d(reference)
    num = np.einsum("mi,mi->m", d, (system.mass @ d.T).T)
    den = np.einsum("mi,mi->m", r, (system.mass @ r.T).T)
    return np.sqrt(np.maximum(num, 0) / den)
