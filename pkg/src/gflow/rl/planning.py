"""Return-conditioned planning: inverse dynamics + guided window sampling.

The planner is a velocity model over flattened state windows conditioned
on a scalar return-to-go. Acting replans every step: clamp the first
state of the window to the current (normalized) state, sample a window
with guidance, read off the next state, and let the inverse-dynamics
model translate the state pair into an action.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .. import autodiff as ad
from ..checkpoint import load_container, save_container
from ..errors import NumericError
from ..fm import GuidanceConfig, TrainConfig, TrainState, init_train_state, train
from ..models import Mlp, MlpConfig, VelocityModel, VelocityModelConfig
from ..optim import Adam, AdamConfig
from ..sampler import Clamp, SampleRequest, sample
from .dataset import OfflineDataset
from .env import ACTION_DIM, STATE_DIM, PointMassConfig, reset, step

RTG_RULES = ("constant", "subtract")


@dataclass
class IdmConfig:
    widths: tuple = (1024, 1024)
    dropout: float = 0.1
    activation: str = "relu"
    lr: float = 1e-4
    batch_size: int = 64
    iterations: int = 5000
    val_every: int = 250
    seed: int = 0


def _mse_step(model: Mlp, adam: Adam, x, y, rng):
    pred = model.forward_graph(x, rng)
    resid = ad.sub(pred, ad.constant(y))
    loss = ad.scale(ad.sum_all(ad.square(resid)), 1.0 / x.shape[0])
    ad.backward(loss)
    adam.step({k: p.grad for k, p in model.params.items()})
    return float(loss.value)


def train_idm(dataset: OfflineDataset, cfg: IdmConfig = IdmConfig()):
    """Fit actions from consecutive normalized state pairs; keep the
    parameters with the best held-out MSE. Returns (model, info)."""
    x_tr, a_tr = dataset.idm_pairs("train")
    x_val, a_val = dataset.idm_pairs("val")
    model = Mlp(
        MlpConfig(2 * STATE_DIM, ACTION_DIM, widths=cfg.widths, activation=cfg.activation, dropout=cfg.dropout),
        seed=cfg.seed,
    )
    adam = Adam(model.params, AdamConfig(lr=cfg.lr))
    rng = np.random.default_rng(cfg.seed)

    def val_mse():
        err = model.forward(x_val) - a_val
        return float((err * err).sum() / x_val.shape[0])

    best = {k: v.copy() for k, v in model.param_values().items()}
    best_mse = val_mse()
    best_iter = 0
    curve = [(0, best_mse)]
    for it in range(1, cfg.iterations + 1):
        idx = rng.integers(0, x_tr.shape[0], cfg.batch_size)
        _mse_step(model, adam, x_tr[idx], a_tr[idx], rng)
        if it % cfg.val_every == 0 or it == cfg.iterations:
            mse = val_mse()
            curve.append((it, mse))
            if mse < best_mse:
                best_mse = mse
                best_iter = it
                best = {k: v.copy() for k, v in model.param_values().items()}
    model.load_param_values(best)
    return model, {"best_val_mse": best_mse, "best_iteration": best_iter, "val_curve": curve}


def save_idm(path, model: Mlp, info: Optional[dict] = None):
    header = {"kind": "idm", "config": model.config.asdict()}
    if info:
        header["best_val_mse"] = info["best_val_mse"]
        header["best_iteration"] = info["best_iteration"]
    save_container(path, header, {"param/" + k: v for k, v in model.param_values().items()})


def load_idm(path) -> Mlp:
    header, arrays = load_container(path)
    if header.get("kind") != "idm":
        raise ValueError(f"{path}: not an inverse-dynamics checkpoint (kind={header.get('kind')!r})")
    model = Mlp(MlpConfig.fromdict(header["config"]))
    model.load_param_values({k[len("param/") :]: v for k, v in arrays.items() if k.startswith("param/")})
    return model


def planner_model_config(dataset: OfflineDataset, widths=(256, 256), scheduler: str = "ot") -> VelocityModelConfig:
    return VelocityModelConfig(
        d=dataset.window_dim,
        k=1,
        widths=widths,
        horizon=dataset.horizon,
        scheduler=scheduler,
    )


def train_planner(
    dataset: OfflineDataset,
    model_cfg: VelocityModelConfig,
    train_cfg: TrainConfig,
    on_checkpoint=None,
    log_every: int = 0,
) -> TrainState:
    """Flow-match window targets conditioned on normalized RTG."""
    x, rtg = dataset.windows()
    model = VelocityModel(model_cfg, seed=train_cfg.seed)
    state = init_train_state(model, train_cfg)

    def data_fn(rng, n):
        idx = rng.integers(0, x.shape[0], n)
        return x[idx], rtg[idx]

    train(state, data_fn, train_cfg, on_checkpoint=on_checkpoint, log_every=log_every)
    return state


@dataclass
class PlanningSetup:
    """Everything acting needs besides the current environment state."""

    model: VelocityModel
    idm: Mlp
    dataset: OfflineDataset
    guidance: GuidanceConfig
    target_rtg: float
    rtg_rule: str = "constant"

    def __post_init__(self):
        if self.rtg_rule not in RTG_RULES:
            raise ValueError(f"unknown rtg rule {self.rtg_rule!r} (options: {RTG_RULES})")


def plan_window(setup: PlanningSetup, state_norm: np.ndarray, g: float, rng) -> np.ndarray:
    """Sample one window with the first state clamped to state_norm."""
    clamp = Clamp(np.arange(STATE_DIM), state_norm)
    req = SampleRequest(n_samples=1, guidance=setup.guidance, y=np.array([g]), clamp=clamp)
    return sample(setup.model, req, rng)[0]


def plan_and_act(setup: PlanningSetup, rng: np.random.Generator, env: Optional[PointMassConfig] = None):
    """Roll out one evaluation episode, replanning every step.

    Returns (episode_return, info) where info carries the visited states,
    actions and rewards.
    """
    env = env or setup.dataset.env
    ds = setup.dataset
    s = reset(env, rng)
    g = setup.target_rtg
    states = [s]
    acts = []
    rewards = []
    for _ in range(env.episode_len):
        sn = ds.normalize(s)
        window = plan_window(setup, sn, g, rng)
        next_norm = window[STATE_DIM : 2 * STATE_DIM]
        a = setup.idm.forward(np.concatenate([sn, next_norm]))
        if not np.all(np.isfinite(a)):
            raise NumericError("inverse dynamics produced a non-finite action")
        a = np.clip(a, -1.0, 1.0)
        s, r = step(env, s, a)
        states.append(s)
        acts.append(a)
        rewards.append(r)
        if setup.rtg_rule == "subtract":
            g = g - r / ds.reward_scale
    rewards = np.array(rewards)
    return float(rewards.sum()), {
        "states": np.array(states),
        "actions": np.array(acts),
        "rewards": rewards,
    }


def episode_rng(seed: int, episode: int) -> np.random.Generator:
    """Stream for one evaluation episode; identical across planner settings
    so settings are compared on common initial states and noise draws."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(episode,)))


def evaluate_planner(setup: PlanningSetup, n_episodes: int, seed: int = 0) -> np.ndarray:
    returns = np.empty(n_episodes)
    for e in range(n_episodes):
        returns[e], _ = plan_and_act(setup, episode_rng(seed, e))
    return returns


def probe_plans(
    model: VelocityModel,
    dataset: OfflineDataset,
    guidance: GuidanceConfig,
    target_rtg: float,
    n_plans: int = 16,
    seed: int = 0,
):
    """Sample open-loop plans from fresh initial states and measure how
    physical they are: step size, and how far consecutive positions drift
    from the position the stored velocity implies."""
    rng = np.random.default_rng(seed)
    env = dataset.env
    H = dataset.horizon
    windows = np.empty((n_plans, H, STATE_DIM))
    for i in range(n_plans):
        s0 = reset(env, rng)
        clamp = Clamp(np.arange(STATE_DIM), dataset.normalize(s0))
        req = SampleRequest(n_samples=1, guidance=guidance, y=np.array([target_rtg]), clamp=clamp)
        raw = sample(model, req, rng)[0].reshape(H, STATE_DIM)
        windows[i] = dataset.denormalize(raw)
    diffs = windows[:, 1:] - windows[:, :-1]
    dyn_err = windows[:, 1:, :2] - windows[:, :-1, :2] - env.dt * windows[:, :-1, 2:]
    return windows, {
        "step_size_mean": float(np.linalg.norm(diffs, axis=2).mean()),
        "dynamics_error_mean": float(np.linalg.norm(dyn_err, axis=2).mean()),
        "state_abs_max": float(np.abs(windows).max()),
    }
