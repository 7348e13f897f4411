"""Adam with bias correction, applied identically to every parameter kind."""
from __future__ import annotations

import math

import numpy as np


def adam_step(param: np.ndarray, grad: np.ndarray, m: np.ndarray, v: np.ndarray,
              t: int, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> None:
    """In-place update of ``param``, ``m`` and ``v`` for step ``t >= 1``."""
    if t < 1:
        raise ValueError("Adam step counter starts at 1")
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    mhat = m / (1.0 - beta1 ** t)
    vhat = v / (1.0 - beta2 ** t)
    param -= lr * mhat / (np.sqrt(vhat) + eps)


class Adam:
    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8,
                 clip_norm: float = 0.0):
        self.params = list(params)
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ValueError("parameter names must be unique")
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.clip_norm = clip_norm
        self.t = 0
        self.m = {p.name: np.zeros_like(p.value) for p in self.params}
        self.v = {p.name: np.zeros_like(p.value) for p in self.params}

    def step(self, grads) -> float:
        """Apply one update; returns the global gradient norm.

        Raises ``FloatingPointError`` naming the first non-finite gradient
        before touching any parameter.
        """
        sq = 0.0
        for p in self.params:
            g = grads.get(p)
            if g is None:
                continue
            if not np.all(np.isfinite(g)):
                raise FloatingPointError(f"non-finite gradient for {p.name}")
            sq += float(np.dot(g.ravel(), g.ravel()))
        norm = math.sqrt(sq)
        factor = 1.0
        if self.clip_norm > 0 and norm > self.clip_norm:
            factor = self.clip_norm / norm
        self.t += 1
        for p in self.params:
            g = grads.get(p)
            if g is None:
                continue
            if factor != 1.0:
                g = g * factor
            adam_step(p.value, g.astype(p.value.dtype, copy=False), self.m[p.name],
                      self.v[p.name], self.t, self.lr, self.beta1, self.beta2, self.eps)
        return norm

    def state_tensors(self) -> dict[str, np.ndarray]:
        out = {}
        for name in sorted(self.m):
            out[f"adam.m/{name}"] = self.m[name]
            out[f"adam.v/{name}"] = self.v[name]
        return out

    def load_state(self, tensors: dict[str, np.ndarray], t: int) -> None:
        for name in self.m:
            self.m[name][...] = tensors[f"adam.m/{name}"]
            self.v[name][...] = tensors[f"adam.v/{name}"]
        self.t = t
