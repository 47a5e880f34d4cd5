"""Fully connected network in NumPy with hand-written reverse mode.

All parameters live in one flat float64 vector; per-layer weights and
biases are views into it, so optimizers update ``params.flat`` in place.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..errors import InvalidArgumentError

ACTIVATIONS = ("tanh", "swish")
FINAL_ACTIVATIONS = ("linear", "bounded")
ENCODINGS = ("omega_vector", "f_at_dofs")


@dataclass(frozen=True)
class NetworkConfig:
    input_dim: int
    output_dim: int
    hidden_layers: tuple = (128, 128, 128)
    activation: str = "tanh"
    final_activation: str = "linear"
    output_bound: float = 1.0
    input_encoding: str = "f_at_dofs"
    init_seed: int = 0
    input_scale: float = 1.0
    output_scale: float = 1.0
    zero_output_init: bool = True

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(w) for w in self.hidden_layers))
        if self.input_dim < 1 or self.output_dim < 1 or any(w < 1 for w in self.hidden_layers):
            raise InvalidArgumentError("layer widths must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise InvalidArgumentError(f"activation must be one of {ACTIVATIONS}")
        if self.final_activation not in FINAL_ACTIVATIONS:
            raise InvalidArgumentError(f"final_activation must be one of {FINAL_ACTIVATIONS}")
        if self.input_encoding not in ENCODINGS:
            raise InvalidArgumentError(f"input_encoding must be one of {ENCODINGS}")

    @property
    def widths(self):
        return (self.input_dim,) + self.hidden_layers + (self.output_dim,)

    def to_dict(self):
        d = asdict(self)
        d["hidden_layers"] = list(self.hidden_layers)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def with_(self, **changes):
        return replace(self, **changes)


def _act(name, z):
    if name == "tanh":
        a = np.tanh(z)
        return a, 1.0 - a * a
    s = 1.0 / (1.0 + np.exp(-z))
    return z * s, s * (1.0 + z * (1.0 - s))


@dataclass(eq=False)
class NetworkParams:
    config: NetworkConfig
    flat: np.ndarray
    weights: list = field(default_factory=list)
    biases: list = field(default_factory=list)

    def __post_init__(self):
        self.flat = np.ascontiguousarray(self.flat, dtype=float)
        if self.flat.size != n_parameters(self.config):
            raise InvalidArgumentError(
                f"flat parameter vector has {self.flat.size} entries, config needs {n_parameters(self.config)}")
        self.weights, self.biases = [], []
        pos = 0
        w = self.config.widths
        for fan_in, fan_out in zip(w[:-1], w[1:]):
            self.weights.append(self.flat[pos:pos + fan_in * fan_out].reshape(fan_out, fan_in))
            pos += fan_in * fan_out
            self.biases.append(self.flat[pos:pos + fan_out])
            pos += fan_out

    def copy(self):
        return NetworkParams(self.config, self.flat.copy())

    def shapes(self):
        return [(W.shape, b.shape) for W, b in zip(self.weights, self.biases)]


def n_parameters(config):
    w = config.widths
    return sum(a * b + b for a, b in zip(w[:-1], w[1:]))


def init_params(config):
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases, seeded.

    With ``zero_output_init`` the last layer starts at zero, so the initial
    prediction is exactly zero and the first loss is mean |F|^2.
    """
    rng = np.random.Generator(np.random.PCG64(config.init_seed))
    chunks = []
    w = config.widths
    for fan_in, fan_out in zip(w[:-1], w[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        chunks.append(rng.uniform(-bound, bound, fan_in * fan_out))
        chunks.append(rng.uniform(-bound, bound, fan_out))
    params = NetworkParams(config, np.concatenate(chunks))
    if config.zero_output_init:
        params.weights[-1][...] = 0.0
        params.biases[-1][...] = 0.0
    return params


def zero_params(config):
    return NetworkParams(config, np.zeros(n_parameters(config)))


def _check_input(params, x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != params.config.input_dim:
        raise InvalidArgumentError(f"input has {x.shape[1]} features, network expects {params.config.input_dim}")
    return x, single


def forward(params, x, cache=False):
    """Network output for inputs of shape (M, input_dim) or (input_dim,)."""
    cfg = params.config
    x, single = _check_input(params, x)
    h = x * cfg.input_scale
    acts, derivs = [h], []
    last = len(params.weights) - 1
    for layer, (W, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ W.T + b
        if layer < last:
            h, d = _act(cfg.activation, z)
        elif cfg.final_activation == "bounded":
            t = np.tanh(z)
            h, d = cfg.output_bound * t, cfg.output_bound * (1.0 - t * t)
        else:
            h, d = z, None
        acts.append(h)
        derivs.append(d)
    out = cfg.output_scale * h
    if cache:
        return out, (acts, derivs)
    return out[0] if single else out


def backward(params, tape, grad_out):
    """Flat gradient of sum(grad_out * output) with respect to all parameters."""
    cfg = params.config
    acts, derivs = tape
    g = np.zeros_like(params.flat)
    grads = NetworkParams(cfg, g)
    delta = cfg.output_scale * np.asarray(grad_out, dtype=float)
    for layer in range(len(params.weights) - 1, -1, -1):
        if derivs[layer] is not None:
            delta = delta * derivs[layer]
        grads.weights[layer][...] = delta.T @ acts[layer]
        grads.biases[layer][...] = delta.sum(axis=0)
        if layer:
            delta = delta @ params.weights[layer]
    return g


def input_jacobian(params, x):
    """d output / d input for a single input vector (output_dim, input_dim)."""
    cfg = params.config
    x, _ = _check_input(params, x)
    _, (acts, derivs) = forward(params, x, cache=True)
    J = np.eye(cfg.input_dim) * cfg.input_scale
    for layer, W in enumerate(params.weights):
        J = W @ J
        if derivs[layer] is not None:
            J = derivs[layer][0][:, None] * J
    return cfg.output_scale * J
