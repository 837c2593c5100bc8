"""Trainable velocity-field model and a plain MLP.

VelocityModel realizes u(t, x, y): sinusoidal features of t go through a
2-layer projection, the condition vector y (or a learned null token when
the condition is absent) goes through a linear embedding, and the trunk
maps concat(x, t_emb, y_emb) to a d-dimensional velocity. All math is
float64; forward() is a pure-numpy fast path and loss graphs are built
separately with the same op order so the two agree bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import autodiff as ad
from .errors import NumericError

N_TIME_FREQS = 32
_FREQ_LO, _FREQ_HI = 1.0, 1000.0


def time_frequencies(n_freqs: int = N_TIME_FREQS) -> np.ndarray:
    """Geometrically spaced sinusoidal frequencies for t in [0, 1]."""
    return np.exp(np.linspace(np.log(_FREQ_LO), np.log(_FREQ_HI), n_freqs))


def time_features(t, freqs: np.ndarray) -> np.ndarray:
    """(B, 2F) matrix [sin(f_j t), cos(f_j t)] for scalar or (B,) t."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    angles = t[:, None] * freqs[None, :]
    return np.concatenate([np.sin(angles), np.cos(angles)], axis=1)


def one_hot(labels, k: int) -> np.ndarray:
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    if labels.min() < 0 or labels.max() >= k:
        raise ValueError(f"labels out of range for {k} classes")
    out = np.zeros((labels.shape[0], k))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def _glorot(rng, n_in, n_out):
    bound = np.sqrt(6.0 / (n_in + n_out))
    return rng.uniform(-bound, bound, size=(n_in, n_out))


@dataclass
class VelocityModelConfig:
    d: int
    k: int
    widths: tuple = (128, 128)
    activation: str = "mish"
    time_embed_dim: int = 32
    cond_embed_dim: int = 32
    n_freqs: int = N_TIME_FREQS
    final_zero: bool = True
    # carried along for planner checkpoints; 0 means "not a sequence model"
    horizon: int = 0
    scheduler: str = "ot"

    def asdict(self):
        return {
            "d": self.d,
            "k": self.k,
            "widths": list(self.widths),
            "activation": self.activation,
            "time_embed_dim": self.time_embed_dim,
            "cond_embed_dim": self.cond_embed_dim,
            "n_freqs": self.n_freqs,
            "final_zero": self.final_zero,
            "horizon": self.horizon,
            "scheduler": self.scheduler,
        }

    @classmethod
    def fromdict(cls, dd):
        dd = dict(dd)
        dd["widths"] = tuple(dd["widths"])
        return cls(**dd)


class VelocityModel:
    """u(t, x, y) with a learned null token for the absent condition."""

    def __init__(self, config: VelocityModelConfig, seed: int = 0):
        if config.activation not in ad.ACTIVATIONS:
            raise ValueError(f"unknown activation {config.activation!r}")
        self.config = config
        self.freqs = time_frequencies(config.n_freqs)
        self.n_forward_calls = 0
        rng = np.random.default_rng(seed)
        c = config
        p = {}
        tf = 2 * c.n_freqs
        p["time.w1"] = _glorot(rng, tf, c.time_embed_dim)
        p["time.b1"] = np.zeros((1, c.time_embed_dim))
        p["time.w2"] = _glorot(rng, c.time_embed_dim, c.time_embed_dim)
        p["time.b2"] = np.zeros((1, c.time_embed_dim))
        p["cond.w"] = _glorot(rng, c.k, c.cond_embed_dim)
        p["cond.b"] = np.zeros((1, c.cond_embed_dim))
        p["null_token"] = rng.normal(0.0, 1.0, size=(1, c.k))
        dims = [c.d + c.time_embed_dim + c.cond_embed_dim, *c.widths, c.d]
        for i, (n_in, n_out) in enumerate(zip(dims[:-1], dims[1:])):
            last = i == len(dims) - 2
            if last and c.final_zero:
                p[f"trunk.{i}.w"] = np.zeros((n_in, n_out))
            else:
                p[f"trunk.{i}.w"] = _glorot(rng, n_in, n_out)
            p[f"trunk.{i}.b"] = np.zeros((1, n_out))
        self.params = {k: ad.parameter(v) for k, v in p.items()}
        self.n_trunk_layers = len(dims) - 1

    @property
    def d(self):
        return self.config.d

    @property
    def k(self):
        return self.config.k

    def param_values(self):
        return {k: v.value for k, v in self.params.items()}

    def load_param_values(self, values):
        for k, t in self.params.items():
            arr = np.asarray(values[k], dtype=np.float64)
            if arr.shape != t.value.shape:
                raise ValueError(f"shape mismatch for {k}: {arr.shape} vs {t.value.shape}")
            t.value = arr.copy()

    def _cond_rows(self, n_rows, y, null_mask):
        """Resolve the (B, k) condition input and the (B, 1) null mask."""
        k = self.config.k
        if y is None:
            return np.zeros((n_rows, k)), np.ones((n_rows, 1))
        y = np.asarray(y, dtype=np.float64)
        if y.ndim == 1:
            y = np.broadcast_to(y[None, :], (n_rows, k)).copy()
        if y.shape != (n_rows, k):
            raise ValueError(f"condition shape {y.shape} incompatible with ({n_rows}, {k})")
        if null_mask is None:
            m = np.zeros((n_rows, 1))
        else:
            m = np.asarray(null_mask, dtype=np.float64).reshape(n_rows, 1)
        return y, m

    def forward(self, t, x, y=None, null_mask=None) -> np.ndarray:
        """Evaluate u(t, x, y). y=None routes every row through the null token.

        t is a scalar or (B,); x is (B, d) or (d,). Returns (B, d) matching
        the batched input, or (d,) for a single unbatched x.
        """
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if not np.all(np.isfinite(x)):
            raise NumericError("non-finite input to velocity model")
        n = x.shape[0]
        y, m = self._cond_rows(n, y, null_mask)
        p = {k: v.value for k, v in self.params.items()}
        act = _NUMPY_ACTIVATIONS[self.config.activation]

        feats = time_features(np.broadcast_to(np.asarray(t, dtype=np.float64), (n,)), self.freqs)
        temb = act(feats @ p["time.w1"] + p["time.b1"]) @ p["time.w2"] + p["time.b2"]
        ones = np.ones((n, 1))
        cond_in = y * (1.0 - m) + (ones @ p["null_token"]) * m
        cemb = cond_in @ p["cond.w"] + p["cond.b"]
        h = np.concatenate([x, temb, cemb], axis=1)
        for i in range(self.n_trunk_layers):
            h = h @ p[f"trunk.{i}.w"] + p[f"trunk.{i}.b"]
            if i < self.n_trunk_layers - 1:
                h = act(h)
        self.n_forward_calls += 1
        return h[0] if single else h

    def forward_graph(self, t, x, y=None, null_mask=None) -> ad.Tensor:
        """Tape version of forward() for training; same op order as forward."""
        x = np.asarray(x, dtype=np.float64)
        n = x.shape[0]
        y, m = self._cond_rows(n, y, null_mask)
        p = self.params
        act = ad.ACTIVATIONS[self.config.activation]

        feats = ad.constant(time_features(np.broadcast_to(np.asarray(t, dtype=np.float64), (n,)), self.freqs))
        h1 = act(ad.add(ad.matmul(feats, p["time.w1"]), p["time.b1"]))
        temb = ad.add(ad.matmul(h1, p["time.w2"]), p["time.b2"])
        ones = ad.constant(np.ones((n, 1)))
        cond_in = ad.add(
            ad.constant(y * (1.0 - m)),
            ad.mul(ad.matmul(ones, p["null_token"]), ad.constant(m)),
        )
        cemb = ad.add(ad.matmul(cond_in, p["cond.w"]), p["cond.b"])
        h = ad.concat([ad.constant(x), temb, cemb], axis=1)
        for i in range(self.n_trunk_layers):
            h = ad.add(ad.matmul(h, p[f"trunk.{i}.w"]), p[f"trunk.{i}.b"])
            if i < self.n_trunk_layers - 1:
                h = act(h)
        return h


def _np_mish(x):
    return x * np.tanh(np.logaddexp(0.0, x))


_NUMPY_ACTIVATIONS = {
    "relu": lambda x: x * (x > 0.0),
    "tanh": np.tanh,
    "mish": _np_mish,
}


@dataclass
class MlpConfig:
    n_in: int
    n_out: int
    widths: tuple = (1024, 1024)
    activation: str = "relu"
    dropout: float = 0.0

    def asdict(self):
        return {
            "n_in": self.n_in,
            "n_out": self.n_out,
            "widths": list(self.widths),
            "activation": self.activation,
            "dropout": self.dropout,
        }

    @classmethod
    def fromdict(cls, dd):
        dd = dict(dd)
        dd["widths"] = tuple(dd["widths"])
        return cls(**dd)


class Mlp:
    """Plain MLP with optional dropout on hidden activations (training only)."""

    def __init__(self, config: MlpConfig, seed: int = 0):
        if config.activation not in ad.ACTIVATIONS:
            raise ValueError(f"unknown activation {config.activation!r}")
        self.config = config
        rng = np.random.default_rng(seed)
        dims = [config.n_in, *config.widths, config.n_out]
        p = {}
        for i, (n_in, n_out) in enumerate(zip(dims[:-1], dims[1:])):
            p[f"layer.{i}.w"] = _glorot(rng, n_in, n_out)
            p[f"layer.{i}.b"] = np.zeros((1, n_out))
        self.params = {k: ad.parameter(v) for k, v in p.items()}
        self.n_layers = len(dims) - 1

    def param_values(self):
        return {k: v.value for k, v in self.params.items()}

    def load_param_values(self, values):
        for k, t in self.params.items():
            arr = np.asarray(values[k], dtype=np.float64)
            if arr.shape != t.value.shape:
                raise ValueError(f"shape mismatch for {k}: {arr.shape} vs {t.value.shape}")
            t.value = arr.copy()

    def forward(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        act = _NUMPY_ACTIVATIONS[self.config.activation]
        h = x
        for i in range(self.n_layers):
            h = h @ self.params[f"layer.{i}.w"].value + self.params[f"layer.{i}.b"].value
            if i < self.n_layers - 1:
                h = act(h)
        return h[0] if single else h

    def forward_graph(self, x, rng: Optional[np.random.Generator] = None) -> ad.Tensor:
        """Tape forward; dropout masks are drawn from rng when configured."""
        x = np.asarray(x, dtype=np.float64)
        act = ad.ACTIVATIONS[self.config.activation]
        drop = self.config.dropout
        h = ad.constant(x)
        for i in range(self.n_layers):
            h = ad.add(ad.matmul(h, self.params[f"layer.{i}.w"]), self.params[f"layer.{i}.b"])
            if i < self.n_layers - 1:
                h = act(h)
                if drop > 0.0 and rng is not None:
                    keep = (rng.random(h.value.shape) >= drop) / (1.0 - drop)
                    h = ad.mul(h, ad.constant(keep))
        return h
