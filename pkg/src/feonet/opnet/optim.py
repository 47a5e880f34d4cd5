"""Adam and limited-memory BFGS acting on a flat parameter vector."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np


@dataclass
class Adam:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        self.m = None
        self.v = None
        self.t = 0

    def step(self, x, fun_grad):
        loss, g = fun_grad(x)
        if self.m is None:
            self.m = np.zeros_like(x)
            self.v = np.zeros_like(x)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * g
        self.v = self.beta2 * self.v + (1 - self.beta2) * g * g
        mhat = self.m / (1 - self.beta1**self.t)
        vhat = self.v / (1 - self.beta2**self.t)
        x -= self.lr * mhat / (np.sqrt(vhat) + self.eps)
        return loss

    def state(self):
        return {"m": self.m, "v": self.v, "t": self.t}


@dataclass
class LBFGS:
    """L-BFGS with two-loop recursion and backtracking (Armijo) steps.

    Each ``step`` performs up to ``max_iter`` inner iterations, mirroring the
    usual closure-based interface. When backtracking fails to decrease the
    loss the memory is cleared and a fixed small gradient step is taken.
    """

    lr: float = 1.0
    max_iter: int = 10
    history_size: int = 10
    tolerance_grad: float = 1e-15
    tolerance_change: float = 1e-15
    fallback_step: float = 1e-4
    c1: float = 1e-4
    max_backtracks: int = 20

    def __post_init__(self):
        self.s_hist = deque(maxlen=self.history_size)
        self.y_hist = deque(maxlen=self.history_size)
        self.n_fallbacks = 0
        self._cache = None

    def _direction(self, g):
        q = g.copy()
        alphas = []
        for s, y in zip(reversed(self.s_hist), reversed(self.y_hist)):
            rho = 1.0 / (y @ s)
            a = rho * (s @ q)
            alphas.append((a, rho, s, y))
            q -= a * y
        if self.s_hist:
            s, y = self.s_hist[-1], self.y_hist[-1]
            q *= (s @ y) / (y @ y)
        for a, rho, s, y in reversed(alphas):
            b = rho * (y @ q)
            q += (a - b) * s
        return -q

    def step(self, x, fun_grad):
        if self._cache is not None and np.array_equal(self._cache[0], x):
            loss, g = self._cache[1], self._cache[2]
        else:
            loss, g = fun_grad(x)
        first_loss = loss
        for _ in range(self.max_iter):
            if np.max(np.abs(g)) <= self.tolerance_grad:
                break
            d = self._direction(g)
            slope = g @ d
            if slope >= 0:
                self.s_hist.clear()
                self.y_hist.clear()
                d, slope = -g, -(g @ g)
            t = self.lr if self.s_hist else min(1.0, 1.0 / max(np.sum(np.abs(g)), 1e-300)) * self.lr
            accepted = False
            for _ in range(self.max_backtracks):
                x_new = x + t * d
                loss_new, g_new = fun_grad(x_new)
                if np.isfinite(loss_new) and loss_new <= loss + self.c1 * t * slope:
                    accepted = True
                    break
                t *= 0.5
            if not accepted:
                self.n_fallbacks += 1
                self.s_hist.clear()
                self.y_hist.clear()
                x_new = x - self.fallback_step * g
                loss_new, g_new = fun_grad(x_new)
                if not (np.isfinite(loss_new) and loss_new < loss):
                    break
            s, y = x_new - x, g_new - g
            if y @ s > 1e-10 * (y @ y):
                self.s_hist.append(s)
                self.y_hist.append(y)
            x[...] = x_new
            change = abs(loss - loss_new)
            loss, g = loss_new, g_new
            if change <= self.tolerance_change or np.max(np.abs(s)) <= self.tolerance_change:
                break
        self._cache = (x.copy(), loss, g)
        return first_loss

    def state(self):
        return {"history": len(self.s_hist), "fallbacks": self.n_fallbacks}
