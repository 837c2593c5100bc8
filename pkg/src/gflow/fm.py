"""Flow-matching training and guidance.

Training regresses the network onto the conditional path velocity
alpha_dot x1 + sigma_dot x0 at x_t = alpha x1 + sigma x0, with the
condition dropped to the learned null token at rate p_uncond.  Guidance
combines one null and one conditioned evaluation per query point.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from . import autodiff as ad
from .checkpoint import load_container, restore_rng, rng_state, save_container
from .errors import NumericError, SingularityError
from .models import VelocityModel, VelocityModelConfig
from .optim import Adam, AdamConfig, Ema
from .scheduler import EPS_T, Scheduler, make_scheduler


@dataclass
class TrainConfig:
    iterations: int = 10_000
    batch_size: int = 64
    lr: float = 1e-4
    lr_final: float = 0.0  # 0 keeps lr constant; else linear decay to this value
    beta1: float = 0.9
    beta2: float = 0.999
    p_uncond: float = 0.25
    seed: int = 0
    scheduler: str = "ot"
    ema_decay: float = 0.995
    ema_every: int = 10
    checkpoint_every: int = 0  # 0 disables periodic checkpoints

    def asdict(self):
        return asdict(self)

    @classmethod
    def fromdict(cls, dd):
        return cls(**dd)


@dataclass
class GuidanceConfig:
    omega: float = 1.0
    n_ode: int = 100
    solver: str = "euler"
    init_scale: float = 1.0  # nu: x0 ~ N(0, nu^2 I)

    def __post_init__(self):
        if self.solver not in ("euler", "midpoint"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.n_ode < 1:
            raise ValueError("n_ode must be >= 1")
        if self.init_scale <= 0.0:
            raise ValueError("init_scale must be positive")

    def asdict(self):
        return asdict(self)

    @classmethod
    def fromdict(cls, dd):
        return cls(**dd)


def cfm_loss(model: VelocityModel, scheduler: Scheduler, x1, y, rng: np.random.Generator, p_uncond: float):
    """One conditional flow-matching batch: returns (loss, grads).

    Per-sample draws: t ~ U[0,1], x0 ~ N(0,I), and an independent
    Bernoulli(p_uncond) mask routing the condition to the null token.
    """
    x1 = np.asarray(x1, dtype=np.float64)
    n, d = x1.shape
    t = rng.random(n)
    x0 = rng.standard_normal((n, d))
    if y is None:
        null_mask = np.ones((n, 1))
        y_in = None
    else:
        null_mask = (rng.random((n, 1)) < p_uncond).astype(np.float64)
        y_in = np.asarray(y, dtype=np.float64)

    alpha, sigma, alpha_dot, sigma_dot = scheduler(t)
    x_t = alpha[:, None] * x1 + sigma[:, None] * x0
    target = alpha_dot[:, None] * x1 + sigma_dot[:, None] * x0

    pred = model.forward_graph(t, x_t, y_in, null_mask)
    resid = ad.sub(pred, ad.constant(target))
    loss_node = ad.scale(ad.sum_all(ad.square(resid)), 1.0 / n)
    loss = float(loss_node.value)
    if not np.isfinite(loss):
        raise NumericError(
            "non-finite training loss "
            f"(t range [{t.min():.4g}, {t.max():.4g}], |x_t| max {np.abs(x_t).max():.4g})"
        )
    ad.backward(loss_node)
    grads = {k: p.grad for k, p in model.params.items()}
    return loss, grads


@dataclass
class TrainState:
    """Everything needed to continue a run bit-for-bit."""

    model: VelocityModel
    adam: Adam
    ema: Ema
    rng: np.random.Generator
    iteration: int = 0
    losses: list = field(default_factory=list)


def init_train_state(model: VelocityModel, cfg: TrainConfig) -> TrainState:
    adam = Adam(model.params, AdamConfig(lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2))
    ema = Ema(model.params, decay=cfg.ema_decay, update_every=cfg.ema_every)
    return TrainState(model, adam, ema, np.random.default_rng(cfg.seed))


def train(
    state: TrainState,
    data_fn: Callable[[np.random.Generator, int], tuple],
    cfg: TrainConfig,
    n_iterations: Optional[int] = None,
    on_checkpoint: Optional[Callable[[TrainState], None]] = None,
    log_every: int = 0,
) -> list:
    """Run (or continue) training; returns the losses of the new iterations.

    data_fn(rng, n) must return (x1, y) with y either (n, k) or None.
    """
    scheduler = make_scheduler(cfg.scheduler)
    todo = cfg.iterations - state.iteration if n_iterations is None else n_iterations
    new_losses = []
    for _ in range(max(0, todo)):
        if cfg.lr_final > 0.0 and cfg.iterations > 1:
            # linear decay, a function of the iteration only, so a resumed
            # run follows the identical schedule
            frac = min(state.iteration / (cfg.iterations - 1), 1.0)
            state.adam.config.lr = cfg.lr + (cfg.lr_final - cfg.lr) * frac
        x1, y = data_fn(state.rng, cfg.batch_size)
        loss, grads = cfm_loss(state.model, scheduler, x1, y, state.rng, cfg.p_uncond)
        state.adam.step(grads)
        state.iteration += 1
        state.ema.maybe_update(state.model.params, state.iteration)
        state.losses.append(loss)
        new_losses.append(loss)
        if log_every and state.iteration % log_every == 0:
            recent = state.losses[-log_every:]
            print(f"iter {state.iteration:>7d}  loss {np.mean(recent):.6f}")
        if cfg.checkpoint_every and on_checkpoint and state.iteration % cfg.checkpoint_every == 0:
            on_checkpoint(state)
    return new_losses


def save_train_state(path, state: TrainState, train_cfg: TrainConfig, extra_header: Optional[dict] = None):
    header = {
        "kind": "train_state",
        "model_config": state.model.config.asdict(),
        "train_config": train_cfg.asdict(),
        "iteration": state.iteration,
        "adam_steps": state.adam.step_count,
        "rng": rng_state(state.rng),
    }
    if extra_header:
        header.update(extra_header)
    arrays = {}
    for k, v in state.model.param_values().items():
        arrays["param/" + k] = v
    for k, v in state.adam.state_arrays().items():
        arrays["adam/" + k] = v
    for k, v in state.ema.shadow.items():
        arrays["ema/" + k] = v
    arrays["losses"] = np.asarray(state.losses, dtype=np.float64)
    save_container(path, header, arrays)


def load_train_state(path):
    """Returns (state, train_cfg, header)."""
    header, arrays = load_container(path)
    if header.get("kind") != "train_state":
        raise NumericError(f"{path}: not a training checkpoint (kind={header.get('kind')!r})")
    model = VelocityModel(VelocityModelConfig.fromdict(header["model_config"]))
    model.load_param_values({k[len("param/") :]: v for k, v in arrays.items() if k.startswith("param/")})
    cfg = TrainConfig.fromdict(header["train_config"])
    state = init_train_state(model, cfg)
    state.adam.load_state_arrays(
        {k[len("adam/") :]: v for k, v in arrays.items() if k.startswith("adam/")}, header["adam_steps"]
    )
    state.ema.load_shadow({k[len("ema/") :]: v for k, v in arrays.items() if k.startswith("ema/")})
    state.rng = restore_rng(header["rng"])
    state.iteration = header["iteration"]
    state.losses = list(arrays["losses"])
    return state, cfg, header


def ema_model(state: TrainState) -> VelocityModel:
    """Copy of the model carrying the EMA weights (the deployment weights)."""
    model = VelocityModel(state.model.config)
    model.load_param_values(state.ema.shadow)
    return model


def save_model(path, model: VelocityModel, extra_header: Optional[dict] = None):
    header = {"kind": "velocity_model", "model_config": model.config.asdict()}
    if extra_header:
        header.update(extra_header)
    save_container(path, header, {"param/" + k: v for k, v in model.param_values().items()})


def load_model(path) -> VelocityModel:
    header, arrays = load_container(path)
    if header.get("kind") != "velocity_model":
        raise NumericError(f"{path}: not a model checkpoint (kind={header.get('kind')!r})")
    model = VelocityModel(VelocityModelConfig.fromdict(header["model_config"]))
    model.load_param_values({k[len("param/") :]: v for k, v in arrays.items() if k.startswith("param/")})
    return model


def guided_velocity(model: VelocityModel, t, x, y, omega: float) -> np.ndarray:
    """(1 - omega) u(t, x, null) + omega u(t, x, y): exactly two evaluations.

    At omega = 1 this is the conditional field alone (the null branch is
    still evaluated; the combination weight is just 0).
    """
    x = np.asarray(x, dtype=np.float64)
    xb = np.atleast_2d(x)
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 1:
        y = np.broadcast_to(y, (xb.shape[0], y.shape[0]))
    u_null = model.forward(t, xb, None)
    u_cond = model.forward(t, xb, y)
    out = (1.0 - omega) * u_null + omega * u_cond
    return out[0] if x.ndim == 1 else out


def _score_coeffs(scheduler: Scheduler, t):
    t = float(t)
    if not (EPS_T <= t <= 1.0 - EPS_T):
        raise ValueError(f"t={t} outside [{EPS_T}, {1 - EPS_T}] where the conversion is well conditioned")
    coef = scheduler.coefficients(t)
    if coef.b == 0.0:
        raise SingularityError(f"velocity/score conversion degenerate at t={t} (b_t = 0)")
    return coef


def velocity_to_score(scheduler: Scheduler, t, x, u) -> np.ndarray:
    """Invert u = a x + b s pointwise."""
    coef = _score_coeffs(scheduler, t)
    return (np.asarray(u, dtype=np.float64) - coef.a * np.asarray(x, dtype=np.float64)) / coef.b


def score_to_velocity(scheduler: Scheduler, t, x, s) -> np.ndarray:
    coef = _score_coeffs(scheduler, t)
    return coef.a * np.asarray(x, dtype=np.float64) + coef.b * np.asarray(s, dtype=np.float64)


def guided_score_ode_drift(scheduler: Scheduler, t, x, s_uncond, s_cond, omega: float) -> np.ndarray:
    """Probability-flow drift f_t x - (g_t^2 / 2) [(1-omega) s_null + omega s_y].

    With f_t = a_t and g_t^2 = -2 b_t this equals the guided velocity
    combination applied to the matching per-branch velocities.
    """
    coef = _score_coeffs(scheduler, t)
    s_mix = (1.0 - omega) * np.asarray(s_uncond, dtype=np.float64) + omega * np.asarray(s_cond, dtype=np.float64)
    return coef.f * np.asarray(x, dtype=np.float64) - 0.5 * coef.g_sq * s_mix


def loss_curve_csv_rows(losses, start_iteration: int = 1):
    """(iteration, loss) pairs for the training-log CSV."""
    return [(start_iteration + i, float(v)) for i, v in enumerate(losses)]
