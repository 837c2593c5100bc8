"""Adam and exponential moving average of parameters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class AdamConfig:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


class Adam:
    def __init__(self, params: dict, config: AdamConfig = AdamConfig()):
        self.params = params
        self.config = config
        self.step_count = 0
        self.m = {k: np.zeros_like(p.value) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.value) for k, p in params.items()}

    def step(self, grads: dict):
        c = self.config
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - c.beta1**t
        bc2 = 1.0 - c.beta2**t
        for k, p in self.params.items():
            g = grads[k]
            if g.shape != p.value.shape:
                raise ValueError(f"gradient shape mismatch for {k}: {g.shape} vs {p.value.shape}")
            self.m[k] = c.beta1 * self.m[k] + (1.0 - c.beta1) * g
            self.v[k] = c.beta2 * self.v[k] + (1.0 - c.beta2) * (g * g)
            m_hat = self.m[k] / bc1
            v_hat = self.v[k] / bc2
            p.value = p.value - c.lr * m_hat / (np.sqrt(v_hat) + c.eps)

    def state_arrays(self):
        out = {}
        for k in self.params:
            out[f"m/{k}"] = self.m[k]
            out[f"v/{k}"] = self.v[k]
        return out

    def load_state_arrays(self, arrays, step_count: int):
        for k in self.params:
            self.m[k] = np.asarray(arrays[f"m/{k}"], dtype=np.float64).copy()
            self.v[k] = np.asarray(arrays[f"v/{k}"], dtype=np.float64).copy()
        self.step_count = step_count


class Ema:
    """Shadow parameters updated as theta_bar <- b*theta_bar + (1-b)*theta."""

    def __init__(self, params: dict, decay: float = 0.995, update_every: int = 10):
        if not 0.0 <= decay <= 1.0:
            raise ValueError("ema decay must lie in [0, 1]")
        self.decay = decay
        self.update_every = update_every
        self.shadow = {k: p.value.copy() for k, p in params.items()}

    def update(self, params: dict):
        b = self.decay
        for k, p in params.items():
            if self.shadow[k].shape != p.value.shape:
                raise ValueError(f"ema shape mismatch for {k}")
            self.shadow[k] = b * self.shadow[k] + (1.0 - b) * p.value

    def maybe_update(self, params: dict, iteration: int):
        if iteration % self.update_every == 0:
            self.update(params)

    def load_shadow(self, arrays):
        for k in self.shadow:
            self.shadow[k] = np.asarray(arrays[k], dtype=np.float64).copy()
