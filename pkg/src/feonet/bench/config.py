"""Experiment configuration and its ``key = value`` text format.

Fields left at ``None`` take the per-problem default from ``PROBLEMS`` when
the config is resolved. Lists are comma separated; ``#`` starts a comment.
"""

from __future__ import annotations

import math
import typing
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

from ..errors import ConfigError

TAU = 2 * math.pi


@dataclass(frozen=True)
class ProblemDefaults:
    dim: int
    order: int
    elements: int
    m_range: tuple
    n_range: tuple
    published_iterations: int
    epsilon: float = 0.1
    test_threshold: Optional[float] = None


# Element orders, element counts, input ranges and iteration budgets follow
# the published per-problem parameter table.
PROBLEMS = {
    "domain1": ProblemDefaults(2, 2, 392, (1.0, 2.0), (0.0, math.pi), 50_000),
    "domain2": ProblemDefaults(2, 2, 551, (1.0, 2.0), (0.0, math.pi), 50_000),
    "domain3": ProblemDefaults(2, 2, 334, (1.0, 2.0), (0.0, math.pi), 50_000),
    "bc1": ProblemDefaults(1, 2, 24, (3.0, 5.0), (0.0, TAU), 150_000, test_threshold=5e-2),
    "bc2": ProblemDefaults(1, 2, 32, (3.0, 5.0), (0.0, TAU), 200_000),
    "eq1": ProblemDefaults(1, 2, 32, (3.0, 5.0), (0.0, TAU), 150_000),
    "eq2": ProblemDefaults(1, 1, 128, (3.0, 5.0), (0.0, TAU), 350_000, epsilon=1.0, test_threshold=8e-2),
    "singular": ProblemDefaults(1, 1, 32, (3.0, 5.0), (0.0, TAU), 50_000, epsilon=1e-5, test_threshold=5e-2),
}

# Desk-scale training budgets. Burgers needs a much longer L-BFGS run; the
# linear problems converge faster with a smaller input gain.
DESK_TRAINING = {
    "eq2": dict(optimizer="lbfgs", epochs=9000, input_gain=1.0),
}
DESK_DEFAULT_TRAINING = dict(optimizer="lbfgs", epochs=1500, input_gain=0.05)


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str = "bc1"
    mode: str = "feonet"
    elements: Optional[int] = None
    element_counts: tuple = (8, 16, 32, 64)
    order: Optional[int] = None
    epsilon: Optional[float] = None
    epsilons: tuple = (1e-5,)
    enriched: tuple = (True, False)
    input_kind: str = "forcing"
    m_range: Optional[tuple] = None
    n_range: Optional[tuple] = None
    m_train: int = 50
    m_test: int = 200
    train_data_seed: int = 1
    test_data_seed: int = 1001
    seeds: tuple = (0, 1, 2, 3, 4)
    reference_factor: int = 32
    mesh_file: str = ""
    hidden_layers: tuple = (64, 64)
    activation: str = "tanh"
    final_activation: str = "linear"
    input_encoding: str = "f_at_dofs"
    input_gain: Optional[float] = None
    optimizer: Optional[str] = None
    epochs: Optional[int] = None
    lbfgs_steps: int = 0
    lr: float = 1e-3
    error_floor: float = 1e-2
    gap_ratio_max: float = 2.0
    test_threshold: Optional[float] = None
    out_dir: str = "reports"

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; choose from {sorted(PROBLEMS)}")
        if self.mode not in ("oracle", "feonet"):
            raise ConfigError(f"mode must be oracle or feonet, got {self.mode!r}")
        if self.input_kind not in ("forcing", "reaction_coefficient"):
            raise ConfigError(f"unknown input_kind {self.input_kind!r}")

    @property
    def defaults(self):
        return PROBLEMS[self.problem]

    def resolved(self):
        """Copy with every ``None`` replaced by the problem's default."""
        d = self.defaults
        train = DESK_TRAINING.get(self.problem, DESK_DEFAULT_TRAINING)
        fill = dict(elements=d.elements, order=d.order, epsilon=d.epsilon, m_range=d.m_range,
                    n_range=d.n_range, test_threshold=d.test_threshold, **train)
        return replace(self, **{k: v for k, v in fill.items() if getattr(self, k) is None})

    def with_(self, **changes):
        return replace(self, **changes)


_HINTS = None


def _field_types():
    global _HINTS
    if _HINTS is None:
        _HINTS = typing.get_type_hints(ExperimentConfig)
    return _HINTS


def _parse_scalar(kind, text):
    if kind is bool:
        low = text.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    return kind(text)


def _element_kind(name):
    """Element type for tuple-valued fields."""
    return {"element_counts": int, "epsilons": float, "enriched": bool, "m_range": float,
            "n_range": float, "seeds": int, "hidden_layers": int}[name]


def parse_value(name, text):
    """Convert the text of ``name = text`` to the field's type."""
    hints = _field_types()
    if name not in hints:
        raise KeyError(name)
    kind = hints[name]
    text = text.strip()
    optional = typing.get_origin(kind) is typing.Union
    if optional:
        if text.lower() in ("", "none", "default"):
            return None
        kind = next(a for a in typing.get_args(kind) if a is not type(None))
    if kind is tuple:
        parts = [p.strip() for p in text.split(",") if p.strip()]
        return tuple(_parse_scalar(_element_kind(name), p) for p in parts)
    return _parse_scalar(kind, text)


def format_value(value):
    if value is None:
        return "default"
    if isinstance(value, tuple):
        return ", ".join(format_value(v) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config(text, source="<config>"):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}: expected 'key = value'", lineno)
        key, val = (s.strip() for s in line.split("=", 1))
        if key in values:
            raise ConfigError(f"{source}: duplicate key {key!r}", lineno)
        try:
            values[key] = parse_value(key, val)
        except KeyError:
            raise ConfigError(f"{source}: unknown key {key!r}", lineno) from None
        except ValueError as exc:
            raise ConfigError(f"{source}: bad value for {key!r}: {exc}", lineno) from None
    try:
        return ExperimentConfig(**values)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, str(path))


def dump_config(config):
    return "".join(f"{f.name} = {format_value(getattr(config, f.name))}\n" for f in fields(config))


def save_config(config, path):
    Path(path).write_text(dump_config(config))
