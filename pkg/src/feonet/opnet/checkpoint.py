"""JSON checkpoints for trained networks.

Floats are written with ``repr`` so parameters round-trip bit-exactly.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..errors import InvalidArgumentError
from .network import NetworkConfig, NetworkParams, n_parameters
from .train import OptimizerConfig, TrainState

FORMAT = "feonet-checkpoint/1"


def save_checkpoint(state, path, rng_state=None):
    """Write ``state`` (a TrainState) to ``path``.

    ``rng_state`` defaults to the bit-generator state of the shuffle RNG
    as it stood before training, which is enough to replay the run.
    """
    params = state.params
    if rng_state is None:
        rng_state = np.random.PCG64(state.optimizer_config.shuffle_seed).state
    doc = {
        "format": FORMAT,
        "config": params.config.to_dict(),
        "optimizer": asdict(state.optimizer_config),
        "shapes": [[list(w), list(b)] for w, b in params.shapes()],
        "epoch": int(state.epoch),
        "best_loss": float(state.best_loss),
        "loss_history": [float(x) for x in state.loss_history],
        "rng_state": _jsonable(rng_state),
        "params": [float(x) for x in params.flat],
    }
    Path(path).write_text(json.dumps(doc, indent=1))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def load_checkpoint(path, expect_config=None):
    """Read a checkpoint back into a TrainState.

    Raises InvalidArgumentError if the stored shapes disagree with the stored
    config or with ``expect_config``.
    """
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != FORMAT:
        raise InvalidArgumentError(f"{path}: not a checkpoint file")
    config = NetworkConfig.from_dict(doc["config"])
    want = [[[o, i], [o]] for i, o in zip(config.widths[:-1], config.widths[1:])]
    if doc["shapes"] != want:
        raise InvalidArgumentError(f"{path}: layer shapes {doc['shapes']} do not match config {want}")
    if expect_config is not None and expect_config.widths != config.widths:
        raise InvalidArgumentError(
            f"{path}: checkpoint widths {config.widths} differ from expected {expect_config.widths}")
    flat = np.array(doc["params"], dtype=float)
    if flat.size != n_parameters(config):
        raise InvalidArgumentError(f"{path}: {flat.size} parameters stored, shapes need {n_parameters(config)}")
    state = TrainState(
        params=NetworkParams(config, flat),
        optimizer_state={},
        epoch=doc["epoch"],
        loss_history=doc["loss_history"],
        config=config,
        optimizer_config=OptimizerConfig(**doc["optimizer"]),
        best_loss=doc["best_loss"],
    )
    state.extra["rng_state"] = doc["rng_state"]
    return state
