"""Double-integrator point mass in the plane.

State is (px, py, vx, vy); the action is an acceleration clipped to the
unit box. Position updates with the current velocity, then the velocity
absorbs the action, and the reward is the negative squared distance of
the new position from the goal at the origin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STATE_DIM = 4
ACTION_DIM = 2


@dataclass(frozen=True)
class PointMassConfig:
    dt: float = 0.1
    episode_len: int = 100
    init_range: float = 1.0  # initial state ~ U[-r, r]^4


def reset(cfg: PointMassConfig, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(-cfg.init_range, cfg.init_range, size=STATE_DIM)


def step(cfg: PointMassConfig, state: np.ndarray, action: np.ndarray):
    """One transition; returns (next_state, reward)."""
    a = np.clip(np.asarray(action, dtype=np.float64), -1.0, 1.0)
    pos = state[:2] + cfg.dt * state[2:]
    vel = state[2:] + cfg.dt * a
    nxt = np.concatenate([pos, vel])
    reward = -float(pos @ pos)
    return nxt, reward


def pd_action(state: np.ndarray, rng: np.random.Generator, noise: float, k: float = 1.0, c: float = 2.0):
    """Proportional-derivative controller toward the origin, plus Gaussian
    exploration noise. With k=1, c=2 the closed-loop map is stable."""
    return -k * state[:2] - c * state[2:] + noise * rng.standard_normal(ACTION_DIM)


def rollout(cfg: PointMassConfig, rng: np.random.Generator, noise: float):
    """One behavior episode; returns (states (T+1,4), actions (T,2), rewards (T,))."""
    states = np.empty((cfg.episode_len + 1, STATE_DIM))
    actions = np.empty((cfg.episode_len, ACTION_DIM))
    rewards = np.empty(cfg.episode_len)
    s = reset(cfg, rng)
    states[0] = s
    for t in range(cfg.episode_len):
        a = pd_action(s, rng, noise)
        s, r = step(cfg, s, a)
        states[t + 1] = s
        actions[t] = np.clip(a, -1.0, 1.0)
        rewards[t] = r
    return states, actions, rewards
