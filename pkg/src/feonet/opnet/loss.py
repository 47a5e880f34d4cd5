"""Galerkin residual loss over a batch of predicted coefficient vectors.

For sample m the residual is r_m = A a_m - F_m (linear) or
r_m = A a_m - q(a_m) - F_m (Burgers), and the loss is mean_m |r_m|^2.
"""

import numpy as np

from ..errors import InvalidArgumentError, NumericOverflowError
from .network import backward, forward


def _systems(system, systems, M):
    if systems is None:
        return None
    if len(systems) != M:
        raise InvalidArgumentError(f"{len(systems)} per-sample systems for {M} predictions")
    return systems


def residuals(alpha, system, loads, systems=None):
    """Residual vectors (M, n) for predictions ``alpha`` of shape (M, n)."""
    alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
    F = np.atleast_2d(np.asarray(loads, dtype=float))
    if alpha.shape != F.shape or alpha.shape[1] != system.n:
        raise InvalidArgumentError(
            f"predictions {alpha.shape} and loads {F.shape} must both be (M, {system.n})")
    per = _systems(system, systems, len(alpha))
    if per is not None:
        R = np.stack([s.A @ a for s, a in zip(per, alpha)]) - F
    else:
        R = (system.A @ alpha.T).T - F
    if system.tensor is not None:
        R -= system.tensor.apply(alpha)
    return R


def residual_loss(alpha, system, loads, systems=None):
    R = residuals(alpha, system, loads, systems)
    return float(np.sum(R * R) / len(R))


def loss_alpha_gradient(alpha, system, loads, systems=None):
    """Loss and dL/d alpha = (2/M) J(alpha)^T r(alpha), shape (M, n)."""
    alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
    R = residuals(alpha, system, loads, systems)
    M = len(R)
    per = _systems(system, systems, M)
    if per is not None:
        G = np.stack([s.A.T @ r for s, r in zip(per, R)])
    else:
        G = (system.A.T @ R.T).T
    if system.tensor is not None:
        G -= system.tensor.vjp(alpha, R)
    return float(np.sum(R * R) / M), (2.0 / M) * G, R


def loss_gradient(params, inputs, system, loads, systems=None, epoch=None):
    """Loss and flat parameter gradient for one batch.

    Raises ``NumericOverflowError`` naming the first sample whose residual is
    not finite.
    """
    alpha, tape = forward(params, inputs, cache=True)
    loss, dalpha, R = loss_alpha_gradient(alpha, system, loads, systems)
    if not np.isfinite(loss):
        bad = np.flatnonzero(~np.isfinite(R).all(axis=1) | ~np.isfinite(alpha).all(axis=1))
        idx = int(bad[0]) if bad.size else None
        raise NumericOverflowError(f"non-finite loss at epoch {epoch}, sample {idx}", epoch, idx)
    return loss, backward(params, tape, dalpha)
