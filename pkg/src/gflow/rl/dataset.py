"""Offline behavior datasets and trajectory windows.

Episodes come from the PD controller at one or several noise levels.
Planner targets are length-H state windows, flattened time-major and
normalized per dimension; the condition is the discounted H-step
return-to-go divided by reward_scale = |worst episode return|, which
puts every target in [-1, 0].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..checkpoint import load_container, save_container
from .env import ACTION_DIM, STATE_DIM, PointMassConfig, rollout

DATASET_FLAVORS = ("mixed", "low_noise", "replay_heavy")
_NOISE_SCHEDULES = {
    "mixed": (0.1, 0.5, 1.0),
    "low_noise": (0.1,),
    # mostly high-noise behavior with a sliver of clean episodes: the
    # regime where return conditioning has real modes to separate
    "replay_heavy": (0.1, 0.5, 1.0, 1.0, 1.0),
}

GAMMA = 0.99
HORIZON = 64


@dataclass
class OfflineDataset:
    states: np.ndarray  # (N, T+1, 4)
    actions: np.ndarray  # (N, T, 2)
    rewards: np.ndarray  # (N, T)
    noise_levels: np.ndarray  # (N,)
    train_idx: np.ndarray
    val_idx: np.ndarray
    state_mean: np.ndarray
    state_std: np.ndarray
    reward_scale: float
    gamma: float = GAMMA
    horizon: int = HORIZON
    env: PointMassConfig = field(default_factory=PointMassConfig)
    flavor: str = "mixed"
    seed: int = 0

    @property
    def n_episodes(self):
        return self.states.shape[0]

    @property
    def window_dim(self):
        return self.horizon * STATE_DIM

    def normalize(self, s):
        return (np.asarray(s, dtype=np.float64) - self.state_mean) / self.state_std

    def denormalize(self, s):
        return np.asarray(s, dtype=np.float64) * self.state_std + self.state_mean

    def episode_returns(self):
        return self.rewards.sum(axis=1)

    def windows(self, episodes: Optional[np.ndarray] = None):
        """Flattened normalized windows and their RTG targets.

        Returns (x (n_win, H*4), rtg (n_win, 1)). Offsets run over
        0..T-H so every window has a full H rewards ahead of it.
        """
        eps = self.train_idx if episodes is None else np.asarray(episodes)
        H = self.horizon
        T = self.rewards.shape[1]
        n_off = T - H + 1
        s = (self.states[eps] - self.state_mean) / self.state_std  # (n, T+1, 4)
        sw = np.lib.stride_tricks.sliding_window_view(s, H, axis=1)  # (n, T+2-H, 4, H)
        sw = sw[:, :n_off].transpose(0, 1, 3, 2)  # (n, n_off, H, 4)
        x = sw.reshape(len(eps) * n_off, H * STATE_DIM)

        disc = self.gamma ** np.arange(H)
        rw = np.lib.stride_tricks.sliding_window_view(self.rewards[eps], H, axis=1)  # (n, n_off, H)
        rtg = (rw @ disc).reshape(-1, 1) / self.reward_scale
        return np.ascontiguousarray(x), rtg

    def rtg_range(self):
        _, rtg = self.windows()
        return float(rtg.min()), float(rtg.max())

    def idm_pairs(self, split: str = "train"):
        """Normalized (s_t, s_{t+1}) inputs and the action between them."""
        eps = {"train": self.train_idx, "val": self.val_idx}[split]
        s = (self.states[eps] - self.state_mean) / self.state_std
        x = np.concatenate([s[:, :-1], s[:, 1:]], axis=2).reshape(-1, 2 * STATE_DIM)
        a = self.actions[eps].reshape(-1, ACTION_DIM)
        return np.ascontiguousarray(x), np.ascontiguousarray(a)

    def save(self, path):
        header = {
            "kind": "offline_dataset",
            "gamma": self.gamma,
            "horizon": self.horizon,
            "reward_scale": self.reward_scale,
            "flavor": self.flavor,
            "seed": self.seed,
            "env": {"dt": self.env.dt, "episode_len": self.env.episode_len, "init_range": self.env.init_range},
        }
        arrays = {
            "states": self.states,
            "actions": self.actions,
            "rewards": self.rewards,
            "noise_levels": self.noise_levels,
            "train_idx": self.train_idx,
            "val_idx": self.val_idx,
            "state_mean": self.state_mean,
            "state_std": self.state_std,
        }
        save_container(path, header, arrays)

    @classmethod
    def load(cls, path) -> "OfflineDataset":
        header, arrays = load_container(path)
        if header.get("kind") != "offline_dataset":
            raise ValueError(f"{path}: not a dataset container (kind={header.get('kind')!r})")
        return cls(
            states=arrays["states"],
            actions=arrays["actions"],
            rewards=arrays["rewards"],
            noise_levels=arrays["noise_levels"],
            train_idx=arrays["train_idx"],
            val_idx=arrays["val_idx"],
            state_mean=arrays["state_mean"],
            state_std=arrays["state_std"],
            reward_scale=header["reward_scale"],
            gamma=header["gamma"],
            horizon=header["horizon"],
            env=PointMassConfig(**header["env"]),
            flavor=header["flavor"],
            seed=header["seed"],
        )


def discounted_rtg(rewards, gamma: float, horizon: int) -> np.ndarray:
    """Brute-force H-step discounted return-to-go at one offset."""
    r = np.asarray(rewards, dtype=np.float64)[:horizon]
    return float(sum(gamma**k * r[k] for k in range(len(r))))


def generate_dataset(
    n_episodes: int = 1000,
    flavor: str = "mixed",
    seed: int = 0,
    env: PointMassConfig = PointMassConfig(),
    gamma: float = GAMMA,
    horizon: int = HORIZON,
    val_fraction: float = 0.1,
) -> OfflineDataset:
    if flavor not in DATASET_FLAVORS:
        raise ValueError(f"unknown dataset flavor {flavor!r} (options: {DATASET_FLAVORS})")
    if n_episodes < 2:
        raise ValueError("need at least 2 episodes to split off validation")
    schedule = _NOISE_SCHEDULES[flavor]
    rng = np.random.default_rng(seed)
    T = env.episode_len
    states = np.empty((n_episodes, T + 1, STATE_DIM))
    actions = np.empty((n_episodes, T, ACTION_DIM))
    rewards = np.empty((n_episodes, T))
    noise_levels = np.empty(n_episodes)
    for e in range(n_episodes):
        noise = schedule[e % len(schedule)]
        states[e], actions[e], rewards[e] = rollout(env, rng, noise)
        noise_levels[e] = noise

    perm = rng.permutation(n_episodes)
    n_val = max(1, int(round(val_fraction * n_episodes)))
    val_idx = np.sort(perm[:n_val]).astype(np.int64)
    train_idx = np.sort(perm[n_val:]).astype(np.int64)

    flat = states[train_idx].reshape(-1, STATE_DIM)
    state_mean = flat.mean(axis=0)
    state_std = np.maximum(flat.std(axis=0), 1e-8)
    reward_scale = max(float(abs(rewards.sum(axis=1).min())), 1e-8)

    return OfflineDataset(
        states=states,
        actions=actions,
        rewards=rewards,
        noise_levels=noise_levels,
        train_idx=train_idx,
        val_idx=val_idx,
        state_mean=state_mean,
        state_std=state_std,
        reward_scale=reward_scale,
        gamma=gamma,
        horizon=horizon,
        env=env,
        flavor=flavor,
        seed=seed,
    )
