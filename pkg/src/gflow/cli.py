"""gflow command line.

    gflow train-toy      --config cfg [--set section.key=value]...
    gflow sample         --config cfg ...
    gflow rl gen-data    --config cfg ...
    gflow rl train-idm   --config cfg ...
    gflow rl train-planner --config cfg ...
    gflow rl eval        --config cfg ...
    gflow rl sweep       --config cfg ...
    gflow rl probe       --config cfg ...
    gflow bench          --config cfg ...

Every command reads one config file, validates it strictly, writes the
resolved config next to its outputs, and exits 0 on success, 2 on config
errors, 3 on numerical failures. GFLOW_THREADS caps the worker processes
used by `rl sweep`.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import fm
from .checkpoint import load_container
from .config import REQUIRED, Field, load_config, write_resolved
from .csvio import write_csv
from .errors import ConfigError, NumericError
from .fm import GuidanceConfig, TrainConfig
from .models import VelocityModel, VelocityModelConfig, one_hot
from .oracle import GmmSpec, ring_spec
from .rl.dataset import OfflineDataset, generate_dataset
from .rl.env import PointMassConfig
from .rl.planning import (
    IdmConfig,
    PlanningSetup,
    evaluate_planner,
    load_idm,
    probe_plans,
    save_idm,
    train_idm,
    train_planner,
)
from .sampler import SampleRequest, sample
from .svg import svg_lines, svg_scatter

_F = Field

_MODEL_FIELDS = {
    "widths": _F("ints", (128, 128)),
    "activation": _F("str", "mish", choices=("mish", "relu", "tanh")),
    "time_embed_dim": _F("int", 32),
    "cond_embed_dim": _F("int", 32),
    "n_freqs": _F("int", 32),
    "final_zero": _F("bool", True),
}

_TRAIN_FIELDS = {
    "iterations": _F("int", 20000),
    "batch_size": _F("int", 64),
    "lr": _F("float", 1e-4),
    "lr_final": _F("float", 0.0),
    "p_uncond": _F("float", 0.25),
    "seed": _F("int", 0),
    "scheduler": _F("str", "ot", choices=("ot", "cosine")),
    "ema_decay": _F("float", 0.995),
    "ema_every": _F("int", 10),
    "checkpoint_every": _F("int", 0),
    "resume": _F("str", ""),
    "log_every": _F("int", 0),
}

_GUIDANCE_FIELDS = {
    "omega": _F("float", 1.0),
    "init_scale": _F("float", 1.0),
    "n_ode": _F("int", 100),
    "solver": _F("str", "euler", choices=("euler", "midpoint")),
}

SCHEMAS = {
    "train-toy": {
        "data": {
            "preset": _F("str", "ring", choices=("ring", "gauss1d")),
            "n_components": _F("int", 8),
            "radius": _F("float", 3.0),
            "variance": _F("float", 0.05),
        },
        "model": _MODEL_FIELDS,
        "train": _TRAIN_FIELDS,
        "out": {"dir": _F("str", REQUIRED)},
    },
    "sample": {
        "sample": {
            "model": _F("str", REQUIRED),
            "n_samples": _F("int", 2000),
            "label": _F("int", -1),
            "seed": _F("int", 0),
            **_GUIDANCE_FIELDS,
        },
        "out": {"dir": _F("str", REQUIRED)},
    },
    "rl gen-data": {
        "dataset": {
            "n_episodes": _F("int", 1000),
            "flavor": _F("str", "mixed", choices=("mixed", "low_noise", "replay_heavy")),
            "seed": _F("int", 0),
            "gamma": _F("float", 0.99),
            "horizon": _F("int", 64),
            "val_fraction": _F("float", 0.1),
            "episode_len": _F("int", 100),
            "dt": _F("float", 0.1),
            "init_range": _F("float", 1.0),
        },
        "out": {"dir": _F("str", REQUIRED)},
    },
    "rl train-idm": {
        "idm": {
            "dataset": _F("str", REQUIRED),
            "widths": _F("ints", (1024, 1024)),
            "activation": _F("str", "relu", choices=("mish", "relu", "tanh")),
            "dropout": _F("float", 0.1),
            "lr": _F("float", 1e-4),
            "batch_size": _F("int", 64),
            "iterations": _F("int", 5000),
            "val_every": _F("int", 250),
            "seed": _F("int", 0),
        },
        "out": {"dir": _F("str", REQUIRED)},
    },
    "rl train-planner": {
        "planner": {
            "dataset": _F("str", REQUIRED),
            "widths": _F("ints", (256, 256)),
            "activation": _F("str", "mish", choices=("mish", "relu", "tanh")),
            "time_embed_dim": _F("int", 32),
            "cond_embed_dim": _F("int", 32),
            "n_freqs": _F("int", 32),
            "final_zero": _F("bool", True),
        },
        "train": _TRAIN_FIELDS,
        "out": {"dir": _F("str", REQUIRED)},
    },
    "rl eval": {
        "eval": {
            "planner": _F("str", REQUIRED),
            "idm": _F("str", REQUIRED),
            "dataset": _F("str", REQUIRED),
            "target_rtg": _F("str", "auto"),
            "rtg_rule": _F("str", "constant", choices=("constant", "subtract")),
            "n_episodes": _F("int", 20),
            "seed": _F("int", 0),
            **_GUIDANCE_FIELDS,
        },
        "out": {"dir": _F("str", REQUIRED)},
    },
    "rl sweep": {
        "sweep": {
            "planner": _F("str", REQUIRED),
            "idm": _F("str", REQUIRED),
            "dataset": _F("str", REQUIRED),
            "omegas": _F("floats", (1.0, 1.5, 2.0, 2.5)),
            "init_scales": _F("floats", (1.0,)),
            "n_odes": _F("ints", (10,)),
            "solvers": _F("strs", ("euler",)),
            "target_rtgs": _F("strs", ("auto",)),
            "rtg_rule": _F("str", "constant", choices=("constant", "subtract")),
            "n_episodes": _F("int", 20),
            "seed": _F("int", 0),
        },
        "out": {"dir": _F("str", REQUIRED)},
    },
    "rl probe": {
        "probe": {
            "planner": _F("str", REQUIRED),
            "dataset": _F("str", REQUIRED),
            "rtg_factor": _F("float", 1.3),
            "n_plans": _F("int", 16),
            "seed": _F("int", 0),
            **_GUIDANCE_FIELDS,
        },
        "out": {"dir": _F("str", REQUIRED)},
    },
    "bench": {
        "bench": {
            "d": _F("int", 256),
            "k": _F("int", 1),
            "widths": _F("ints", (256, 256)),
            "activation": _F("str", "mish", choices=("mish", "relu", "tanh")),
            "n_odes": _F("ints", (2, 10, 50, 100, 200)),
            "solver": _F("str", "euler", choices=("euler", "midpoint")),
            "guided": _F("bool", True),
            "n_samples": _F("int", 1),
            "replications": _F("int", 100),
            "seed": _F("int", 0),
        },
        "out": {"dir": _F("str", REQUIRED)},
    },
}


def _out_dir(cfg) -> Path:
    out = Path(cfg["out"]["dir"])
    out.mkdir(parents=True, exist_ok=True)
    write_resolved(out / "resolved.cfg", cfg)
    return out


def _guidance(section) -> GuidanceConfig:
    try:
        return GuidanceConfig(
            omega=section["omega"],
            n_ode=section["n_ode"],
            solver=section["solver"],
            init_scale=section["init_scale"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc))


def _require_file(path_str: str, what: str) -> Path:
    path = Path(path_str)
    if not path_str or not path.is_file():
        raise ConfigError(f"{what} path {path_str!r} does not exist")
    return path


def _toy_spec(data) -> GmmSpec:
    if data["preset"] == "ring":
        return ring_spec(data["n_components"], data["radius"], data["variance"])
    return GmmSpec(np.array([1.0]), np.array([[0.0]]), np.array([1.0]), (0,))


def _write_loss_outputs(out: Path, losses):
    write_csv(out / "loss.csv", "loss", ("iteration", "loss"), [(i + 1, float(v)) for i, v in enumerate(losses)])
    n = len(losses)
    if n >= 2:
        idx = np.unique(np.linspace(0, n - 1, min(n, 2000)).astype(int))
        svg_lines(out / "loss.svg", [("loss", idx + 1.0, np.asarray(losses)[idx])], title="training loss")


def _run_training(out: Path, model_cfg: VelocityModelConfig, train_section, data_fn, extra_header):
    tcfg = TrainConfig(
        iterations=train_section["iterations"],
        batch_size=train_section["batch_size"],
        lr=train_section["lr"],
        lr_final=train_section["lr_final"],
        p_uncond=train_section["p_uncond"],
        seed=train_section["seed"],
        scheduler=train_section["scheduler"],
        ema_decay=train_section["ema_decay"],
        ema_every=train_section["ema_every"],
        checkpoint_every=train_section["checkpoint_every"],
    )
    if train_section["resume"]:
        state, _, header = fm.load_train_state(_require_file(train_section["resume"], "resume checkpoint"))
        if state.model.config.asdict() != model_cfg.asdict():
            raise ConfigError("resume checkpoint was trained with a different model config")
        print(f"resuming from iteration {state.iteration}")
    else:
        state = fm.init_train_state(VelocityModel(model_cfg, seed=tcfg.seed), tcfg)

    ckpt_path = out / "checkpoint.gfck"

    def on_checkpoint(st):
        fm.save_train_state(ckpt_path, st, tcfg, extra_header)

    fm.train(state, data_fn, tcfg, on_checkpoint=on_checkpoint, log_every=train_section["log_every"])
    fm.save_train_state(ckpt_path, state, tcfg, extra_header)
    deploy = fm.ema_model(state)
    fm.save_model(out / "model.gfck", deploy, {**extra_header, "trained_iterations": state.iteration})
    _write_loss_outputs(out, state.losses)
    print(f"trained {state.iteration} iterations; final loss {state.losses[-1]:.6f}")
    print(f"wrote {ckpt_path} and {out / 'model.gfck'}")
    return state


def cmd_train_toy(cfg) -> int:
    out = _out_dir(cfg)
    spec = _toy_spec(cfg["data"])
    conditional = cfg["data"]["preset"] == "ring"
    k = spec.n_components if conditional else 1
    m = cfg["model"]
    model_cfg = VelocityModelConfig(
        d=spec.d,
        k=k,
        widths=m["widths"],
        activation=m["activation"],
        time_embed_dim=m["time_embed_dim"],
        cond_embed_dim=m["cond_embed_dim"],
        n_freqs=m["n_freqs"],
        final_zero=m["final_zero"],
        scheduler=cfg["train"]["scheduler"],
    )

    def data_fn(rng, n):
        x1, labels = spec.sample(rng, n)
        return (x1, one_hot(labels, k)) if conditional else (x1, None)

    extra = {"data_preset": cfg["data"]["preset"], "data_spec": spec.asdict()}
    _run_training(out, model_cfg, cfg["train"], data_fn, extra)
    return 0


def cmd_sample(cfg) -> int:
    out = _out_dir(cfg)
    s = cfg["sample"]
    model_path = _require_file(s["model"], "model")
    header, _ = load_container(model_path)
    model = fm.load_model(model_path)
    guidance = _guidance(s)

    label = s["label"]
    if label >= model.k:
        raise ConfigError(f"label {label} out of range for a {model.k}-class model")
    y = one_hot([label], model.k)[0] if label >= 0 else None

    req = SampleRequest(n_samples=s["n_samples"], guidance=guidance, y=y, seed=s["seed"])
    t0 = time.perf_counter()
    samples = sample(model, req)
    elapsed = time.perf_counter() - t0

    spec = GmmSpec.fromdict(header["data_spec"]) if "data_spec" in header else None
    component = None
    if spec is not None and spec.d == model.d:
        dists = np.linalg.norm(samples[:, None, :] - spec.means[None, :, :], axis=2)
        component = dists.argmin(axis=1)

    columns = [f"x{i}" for i in range(model.d)]
    rows = [list(map(float, row)) for row in samples]
    if component is not None:
        columns.append("component")
        rows = [r + [int(c)] for r, c in zip(rows, component)]
    write_csv(out / "samples.csv", "samples", columns, rows)

    if model.d == 2:
        svg_scatter(out / "samples.svg", samples[:, 0], samples[:, 1], component, title="samples")
    elif model.d == 1:
        hist, edges = np.histogram(samples[:, 0], bins=50)
        centers = 0.5 * (edges[:-1] + edges[1:])
        svg_lines(out / "samples.svg", [("count", centers, hist.astype(float))], title="sample histogram")

    print(f"sampled {s['n_samples']} points in {elapsed:.3f}s ({model.n_forward_calls} field evaluations)")
    if component is not None and label >= 0:
        purity = float((component == spec.labels.index(label)).mean())
        write_csv(
            out / "purity.csv",
            "purity",
            ("label", "omega", "n_samples", "purity"),
            [(label, guidance.omega, s["n_samples"], purity)],
        )
        print(f"purity toward component {label}: {purity:.4f}")
    return 0


def cmd_rl_gen_data(cfg) -> int:
    out = _out_dir(cfg)
    d = cfg["dataset"]
    env = PointMassConfig(dt=d["dt"], episode_len=d["episode_len"], init_range=d["init_range"])
    ds = generate_dataset(
        n_episodes=d["n_episodes"],
        flavor=d["flavor"],
        seed=d["seed"],
        env=env,
        gamma=d["gamma"],
        horizon=d["horizon"],
        val_fraction=d["val_fraction"],
    )
    ds.save(out / "dataset.gfck")
    returns = ds.episode_returns()
    write_csv(
        out / "episode_returns.csv",
        "episode-returns",
        ("episode", "noise", "return"),
        [(e, float(ds.noise_levels[e]), float(returns[e])) for e in range(ds.n_episodes)],
    )
    lo, hi = ds.rtg_range()
    print(f"wrote {out / 'dataset.gfck'}: {ds.n_episodes} episodes ({ds.flavor})")
    print(f"returns in [{returns.min():.2f}, {returns.max():.2f}], reward_scale {ds.reward_scale:.4f}")
    print(f"normalized rtg range [{lo:.4f}, {hi:.4f}]")
    return 0


def cmd_rl_train_idm(cfg) -> int:
    out = _out_dir(cfg)
    c = cfg["idm"]
    ds = OfflineDataset.load(_require_file(c["dataset"], "dataset"))
    idm_cfg = IdmConfig(
        widths=c["widths"],
        dropout=c["dropout"],
        activation=c["activation"],
        lr=c["lr"],
        batch_size=c["batch_size"],
        iterations=c["iterations"],
        val_every=c["val_every"],
        seed=c["seed"],
    )
    model, info = train_idm(ds, idm_cfg)
    save_idm(out / "idm.gfck", model, info)
    write_csv(out / "idm_val.csv", "idm-val", ("iteration", "val_mse"), info["val_curve"])
    print(f"best validation mse {info['best_val_mse']:.6f} at iteration {info['best_iteration']}")
    print(f"wrote {out / 'idm.gfck'}")
    return 0


def cmd_rl_train_planner(cfg) -> int:
    out = _out_dir(cfg)
    p = cfg["planner"]
    ds = OfflineDataset.load(_require_file(p["dataset"], "dataset"))
    model_cfg = VelocityModelConfig(
        d=ds.window_dim,
        k=1,
        widths=p["widths"],
        activation=p["activation"],
        time_embed_dim=p["time_embed_dim"],
        cond_embed_dim=p["cond_embed_dim"],
        n_freqs=p["n_freqs"],
        final_zero=p["final_zero"],
        horizon=ds.horizon,
        scheduler=cfg["train"]["scheduler"],
    )
    x, rtg = ds.windows()

    def data_fn(rng, n):
        idx = rng.integers(0, x.shape[0], n)
        return x[idx], rtg[idx]

    extra = {"horizon": ds.horizon, "reward_scale": ds.reward_scale}
    state = _run_training(out, model_cfg, cfg["train"], data_fn, extra)
    ckpt = out / "model.gfck"
    (out / "planner.gfck").write_bytes(ckpt.read_bytes())
    print(f"planner weights also at {out / 'planner.gfck'} (trained on {x.shape[0]} windows)")
    del state
    return 0


def _resolve_rtg(target: str, ds: OfflineDataset) -> float:
    if target == "auto":
        return ds.rtg_range()[1]
    try:
        return float(target)
    except ValueError:
        raise ConfigError(f"target_rtg must be a float or 'auto', got {target!r}")


def _nfe_per_plan(guidance: GuidanceConfig) -> int:
    per_step = 2 if guidance.solver == "euler" else 4
    return per_step * guidance.n_ode


def cmd_rl_eval(cfg) -> int:
    out = _out_dir(cfg)
    e = cfg["eval"]
    model = fm.load_model(_require_file(e["planner"], "planner"))
    idm = load_idm(_require_file(e["idm"], "idm"))
    ds = OfflineDataset.load(_require_file(e["dataset"], "dataset"))
    guidance = _guidance(e)
    setup = PlanningSetup(
        model=model,
        idm=idm,
        dataset=ds,
        guidance=guidance,
        target_rtg=_resolve_rtg(e["target_rtg"], ds),
        rtg_rule=e["rtg_rule"],
    )
    returns = evaluate_planner(setup, e["n_episodes"], e["seed"])
    write_csv(
        out / "returns.csv",
        "returns",
        ("episode", "return"),
        [(i, float(r)) for i, r in enumerate(returns)],
    )
    stderr = returns.std(ddof=1) / np.sqrt(len(returns)) if len(returns) > 1 else 0.0
    print(
        f"omega {guidance.omega}, target rtg {setup.target_rtg:.4f}: "
        f"mean return {returns.mean():.3f} (std {returns.std(ddof=1) if len(returns) > 1 else 0.0:.3f}, "
        f"se {stderr:.3f}, {_nfe_per_plan(guidance)} evals/plan)"
    )
    return 0


def _sweep_cell(args):
    (planner_path, idm_path, dataset_path, omega, nu, n_ode, solver, target, rtg_rule, n_episodes, seed) = args
    model = fm.load_model(planner_path)
    idm = load_idm(idm_path)
    ds = OfflineDataset.load(dataset_path)
    guidance = GuidanceConfig(omega=omega, n_ode=n_ode, solver=solver, init_scale=nu)
    setup = PlanningSetup(
        model=model,
        idm=idm,
        dataset=ds,
        guidance=guidance,
        target_rtg=_resolve_rtg(target, ds),
        rtg_rule=rtg_rule,
    )
    returns = evaluate_planner(setup, n_episodes, seed)
    return {
        "omega": omega,
        "init_scale": nu,
        "n_ode": n_ode,
        "solver": solver,
        "target_rtg": setup.target_rtg,
        "n_episodes": n_episodes,
        "nfe_per_plan": _nfe_per_plan(guidance),
        "mean_return": float(returns.mean()),
        "std_return": float(returns.std(ddof=1)) if n_episodes > 1 else 0.0,
        "stderr": float(returns.std(ddof=1) / np.sqrt(n_episodes)) if n_episodes > 1 else 0.0,
    }


def n_workers() -> int:
    raw = os.environ.get("GFLOW_THREADS", "")
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise ConfigError(f"GFLOW_THREADS must be an integer, got {raw!r}")
        if value < 1:
            raise ConfigError(f"GFLOW_THREADS must be >= 1, got {value}")
        return value
    return os.cpu_count() or 1


def cmd_rl_sweep(cfg) -> int:
    out = _out_dir(cfg)
    s = cfg["sweep"]
    planner = str(_require_file(s["planner"], "planner"))
    idm = str(_require_file(s["idm"], "idm"))
    dataset = str(_require_file(s["dataset"], "dataset"))
    cells = [
        (planner, idm, dataset, omega, nu, n_ode, solver, target, s["rtg_rule"], s["n_episodes"], s["seed"])
        for omega in s["omegas"]
        for nu in s["init_scales"]
        for n_ode in s["n_odes"]
        for solver in s["solvers"]
        for target in s["target_rtgs"]
    ]
    if not cells:
        raise ConfigError("sweep grid is empty")
    for solver in s["solvers"]:
        if solver not in ("euler", "midpoint"):
            raise ConfigError(f"unknown solver {solver!r}")
    workers = min(n_workers(), len(cells))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_cell, cells))
    else:
        results = [_sweep_cell(c) for c in cells]

    columns = (
        "omega", "init_scale", "n_ode", "solver", "target_rtg",
        "n_episodes", "nfe_per_plan", "mean_return", "std_return", "stderr",
    )
    write_csv(out / "sweep.csv", "sweep", columns, [[r[c] for c in columns] for r in results])
    for r in results:
        print(
            f"omega {r['omega']:<5} nu {r['init_scale']:<5} n_ode {r['n_ode']:<4} {r['solver']:<9}"
            f" return {r['mean_return']:.3f} +- {r['stderr']:.3f}"
        )
    if len(s["omegas"]) > 1:
        series = []
        for nu in s["init_scales"]:
            for n_ode in s["n_odes"]:
                for solver in s["solvers"]:
                    pts = [
                        (r["omega"], r["mean_return"])
                        for r in results
                        if r["init_scale"] == nu and r["n_ode"] == n_ode and r["solver"] == solver
                    ]
                    if len(pts) > 1:
                        xs, ys = zip(*sorted(pts))
                        series.append((f"nu={nu} n={n_ode} {solver}", np.array(xs), np.array(ys)))
        if series:
            svg_lines(out / "sweep.svg", series, title="mean return vs guidance weight")
    print(f"wrote {out / 'sweep.csv'} ({len(results)} cells, {workers} workers)")
    return 0


def cmd_rl_probe(cfg) -> int:
    out = _out_dir(cfg)
    p = cfg["probe"]
    model = fm.load_model(_require_file(p["planner"], "planner"))
    ds = OfflineDataset.load(_require_file(p["dataset"], "dataset"))
    guidance = _guidance(p)
    lo, hi = ds.rtg_range()
    targets = [("in_dist", hi), ("ood", hi + (p["rtg_factor"] - 1.0) * (hi - lo))]
    rows = []
    for regime, target in targets:
        _, metrics = probe_plans(model, ds, guidance, target, n_plans=p["n_plans"], seed=p["seed"])
        rows.append(
            (
                regime,
                float(target),
                metrics["step_size_mean"],
                metrics["dynamics_error_mean"],
                metrics["state_abs_max"],
            )
        )
        print(
            f"{regime:<8} rtg {target:+.4f}: step {metrics['step_size_mean']:.4f}, "
            f"dyn err {metrics['dynamics_error_mean']:.4f}, |state| max {metrics['state_abs_max']:.3f}"
        )
    write_csv(
        out / "probe.csv",
        "probe",
        ("regime", "target_rtg", "step_size_mean", "dynamics_error_mean", "state_abs_max"),
        rows,
    )
    return 0


def cmd_bench(cfg) -> int:
    out = _out_dir(cfg)
    b = cfg["bench"]
    model_cfg = VelocityModelConfig(
        d=b["d"], k=b["k"], widths=b["widths"], activation=b["activation"], final_zero=False
    )
    model = VelocityModel(model_cfg, seed=b["seed"])
    y = np.zeros(b["k"]) if b["guided"] else None
    per_step = (2 if b["solver"] == "euler" else 4) if b["guided"] else (1 if b["solver"] == "euler" else 2)
    rows = []
    for n_ode in b["n_odes"]:
        if n_ode < 1:
            raise ConfigError(f"n_ode values must be >= 1, got {n_ode}")
        guidance = GuidanceConfig(omega=2.0, n_ode=n_ode, solver=b["solver"])
        req = SampleRequest(n_samples=b["n_samples"], guidance=guidance, y=y, seed=b["seed"])
        sample(model, req)  # warm up caches before timing
        for rep in range(b["replications"]):
            t0 = time.perf_counter()
            sample(model, req)
            rows.append((n_ode, per_step * n_ode, rep, time.perf_counter() - t0))
    write_csv(out / "bench.csv", "bench", ("n_ode", "nfe", "replication", "seconds"), rows)

    summary = []
    for n_ode in b["n_odes"]:
        secs = np.array([r[3] for r in rows if r[0] == n_ode])
        summary.append((n_ode, per_step * n_ode, float(secs.mean()), float(secs.std(ddof=1))))
        print(f"n_ode {n_ode:>4} ({per_step * n_ode:>4} evals): {secs.mean() * 1e3:8.3f} ms +- {secs.std(ddof=1) * 1e3:.3f}")
    write_csv(out / "bench_summary.csv", "bench-summary", ("n_ode", "nfe", "mean_seconds", "std_seconds"), summary)

    nfe = np.array([r[1] for r in summary], dtype=np.float64)
    mean_s = np.array([r[2] for r in summary])
    if len(summary) > 2:
        coeffs = np.polyfit(nfe, mean_s, 1)
        resid = mean_s - np.polyval(coeffs, nfe)
        ss_tot = ((mean_s - mean_s.mean()) ** 2).sum()
        r_sq = 1.0 - (resid**2).sum() / ss_tot if ss_tot > 0 else float("nan")
        print(f"linear fit: {coeffs[0] * 1e3:.4f} ms/eval + {coeffs[1] * 1e3:.4f} ms, R^2 = {r_sq:.5f}")
        svg_lines(out / "bench.svg", [("mean seconds", nfe, mean_s)], title="sampling time vs field evaluations")
    return 0


_COMMANDS = {
    "train-toy": cmd_train_toy,
    "sample": cmd_sample,
    "rl gen-data": cmd_rl_gen_data,
    "rl train-idm": cmd_rl_train_idm,
    "rl train-planner": cmd_rl_train_planner,
    "rl eval": cmd_rl_eval,
    "rl sweep": cmd_rl_sweep,
    "rl probe": cmd_rl_probe,
    "bench": cmd_bench,
}


def _add_common(sp):
    sp.add_argument("--config", required=True, help="path to the config file")
    sp.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override a config value (repeatable)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gflow", description="guided flow matching toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("train-toy", "sample", "bench"):
        _add_common(sub.add_parser(name))
    rl = sub.add_parser("rl")
    rl_sub = rl.add_subparsers(dest="rl_command", required=True)
    for name in ("gen-data", "train-idm", "train-planner", "eval", "sweep", "probe"):
        _add_common(rl_sub.add_parser(name))
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    command = args.command if args.command != "rl" else f"rl {args.rl_command}"
    try:
        cfg = load_config(args.config, SCHEMAS[command], args.overrides)
        return _COMMANDS[command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
