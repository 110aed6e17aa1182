"""Adam and RMSprop parameter updates, applied in place to flat parameter lists."""

from __future__ import annotations

import numpy as np

OPTIMIZERS = ("adam", "rmsprop")


class Adam:
    """Adam with bias correction (beta1=0.9, beta2=0.999, eps=1e-8)."""

    def __init__(self, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.learning_rate = float(learning_rate)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = None
        self.v = None

    def step(self, params: list, grads: list) -> None:
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        correct1 = 1.0 - self.beta1 ** self.t
        correct2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            if p.shape != g.shape:
                raise ValueError(f"gradient shape {g.shape} does not match parameter shape {p.shape}")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.learning_rate * (m / correct1) / (np.sqrt(v / correct2) + self.eps)


class RMSProp:
    """RMSprop with decay rho=0.9; update lr * g / (sqrt(v) + eps)."""

    def __init__(self, learning_rate: float, rho: float = 0.9, eps: float = 1e-8):
        self.learning_rate = float(learning_rate)
        self.rho, self.eps = rho, eps
        self.v = None

    def step(self, params: list, grads: list) -> None:
        if self.v is None:
            self.v = [np.zeros_like(p) for p in params]
        for p, g, v in zip(params, grads, self.v):
            if p.shape != g.shape:
                raise ValueError(f"gradient shape {g.shape} does not match parameter shape {p.shape}")
            v *= self.rho
            v += (1.0 - self.rho) * (g * g)
            p -= self.learning_rate * g / (np.sqrt(v) + self.eps)


def make_optimizer(name: str, learning_rate: float):
    if name == "adam":
        return Adam(learning_rate)
    if name == "rmsprop":
        return RMSProp(learning_rate)
    raise ValueError(f"unknown optimizer {name!r}; expected one of {OPTIMIZERS}")
