"""Adam and RMSprop optimizers over named parameter collections."""
from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError


class Adam:
    def __init__(self, learning_rate: float = 0.001, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = learning_rate, beta1, beta2, eps
        self.t = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def step(self, named_params, named_grads) -> None:
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for name, p in named_params.items():
            grad = named_grads[name]
            m = self._m.setdefault(name, np.zeros_like(p))
            v = self._v.setdefault(name, np.zeros_like(p))
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad ** 2
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)


class RMSprop:
    def __init__(self, learning_rate: float = 0.001, rho: float = 0.9, eps: float = 1e-8):
        self.lr, self.rho, self.eps = learning_rate, rho, eps
        self._v: dict[str, np.ndarray] = {}

    def step(self, named_params, named_grads) -> None:
        for name, p in named_params.items():
            grad = named_grads[name]
            v = self._v.setdefault(name, np.zeros_like(p))
            v *= self.rho
            v += (1.0 - self.rho) * grad ** 2
            p -= self.lr * grad / (np.sqrt(v) + self.eps)


def make_optimizer(name: str, learning_rate: float):
    name = name.upper()
    if name == "ADAM":
        return Adam(learning_rate)
    if name == "RMSPROP":
        return RMSprop(learning_rate)
    raise ConfigurationError(f"unknown optimizer: {name}")
