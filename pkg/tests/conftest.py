"""Shared fixtures: trained models reused across acceptance checks.

The heavyweight fixtures are session-scoped and lazy, so the fast unit
tests never pay for them. Acceptance checks register one PASS/FAIL line
each, printed in the terminal summary.
"""

import time
from dataclasses import dataclass

import numpy as np
import pytest

from gflow.fm import TrainConfig, ema_model, init_train_state, train
from gflow.models import VelocityModel, VelocityModelConfig, one_hot
from gflow.oracle import ring_spec

_CRITERIA = {}


def report_criterion(number: int, passed: bool, detail: str):
    _CRITERIA[number] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        word = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[criterion {number:02d}] {word}: {detail}")


@dataclass
class TimedArtifact:
    """A trained artifact plus how long it took to build."""

    value: object
    build_seconds: float


@pytest.fixture(scope="session")
def toy_1d_trained():
    """Unconditional 1D standard-normal flow, trained to convergence.

    Calibrated recipe: (64, 64) mish trunk, 8 time frequencies, batch 256,
    lr 1e-3 decayed to 1e-5, 50k iterations, EMA weights. Takes about two
    minutes on one core.
    """
    t0 = time.perf_counter()
    cfg = VelocityModelConfig(d=1, k=1, widths=(64, 64), activation="mish", n_freqs=8)
    tcfg = TrainConfig(iterations=50_000, batch_size=256, lr=1e-3, lr_final=1e-5, seed=0)
    state = init_train_state(VelocityModel(cfg, seed=0), tcfg)

    def data_fn(rng, n):
        return rng.standard_normal((n, 1)), None

    train(state, data_fn, tcfg)
    return TimedArtifact(ema_model(state), time.perf_counter() - t0)


RING_SPEC = ring_spec()


@pytest.fixture(scope="session")
def ring_models():
    """Five conditional ring-mixture flows at a deliberately moderate
    training budget: the conditional field is still blurry at omega=1, so
    guidance has visible sharpening room (a saturated model pins purity at
    1.0 for every omega and cannot show an increase)."""
    k = RING_SPEC.n_components
    models = []
    for seed in range(5):
        cfg = VelocityModelConfig(d=2, k=k, widths=(64, 64), n_freqs=8)
        tcfg = TrainConfig(iterations=2000, batch_size=128, lr=1e-3, p_uncond=0.25, seed=seed)
        state = init_train_state(VelocityModel(cfg, seed=seed), tcfg)

        def data_fn(rng, n):
            x1, labels = RING_SPEC.sample(rng, n)
            return x1, one_hot(labels, k)

        train(state, data_fn, tcfg)
        models.append(ema_model(state))
    return models


@dataclass
class RlStack:
    dataset: object
    idm: object
    planners: list
    target_rtg: float
    build_seconds: float


@pytest.fixture(scope="session")
def rl_stack():
    """Offline dataset, inverse-dynamics model and five trained planners.

    Recipe calibrated on one core: 1000 replay-heavy episodes (mostly
    noisy behavior with a sliver of clean ones, so return conditioning has
    real modes to separate); a (256, 256) IDM with 10% dropout (the
    dropout is what keeps actions sane when the planned next state is
    slightly off the dynamics manifold); (256, 256) planners, 30k
    iterations with lr decay. The conditioning target is the top-quartile
    boundary (0.75 quantile) of the episode-start return-to-go
    distribution: ambitious enough that sharpening the conditional matters,
    still densely supported from a fresh reset. Higher targets thin out the
    support and guidance starts amplifying seed-specific noise; the dataset
    max overshoots what any policy can do from a random start. Builds in
    roughly 20 minutes.
    """
    from gflow.rl.dataset import generate_dataset
    from gflow.rl.planning import IdmConfig, planner_model_config, train_idm, train_planner

    t0 = time.perf_counter()
    ds = generate_dataset(flavor="replay_heavy", seed=0)
    idm, _ = train_idm(
        ds,
        IdmConfig(widths=(256, 256), dropout=0.1, lr=1e-3, batch_size=128, iterations=3000, val_every=250, seed=0),
    )
    planners = []
    for seed in range(5):
        state = train_planner(
            ds,
            planner_model_config(ds, widths=(256, 256)),
            TrainConfig(iterations=30_000, batch_size=128, lr=1e-3, lr_final=1e-5, p_uncond=0.25, seed=seed),
        )
        planners.append(ema_model(state))
    _, rtg = ds.windows()
    first = rtg.reshape(len(ds.train_idx), -1)[:, 0]
    target = float(np.quantile(first, 0.75))
    return RlStack(ds, idm, planners, target, time.perf_counter() - t0)
