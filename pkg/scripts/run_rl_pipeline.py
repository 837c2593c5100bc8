#!/usr/bin/env python3
"""Full offline-planning pipeline on the point-mass environment: behavior
data, inverse dynamics, return-conditioned planner, then a guidance-weight
sweep and a plan-quality probe.

    python3 scripts/run_rl_pipeline.py --out runs/rl
    GFLOW_THREADS=4 python3 scripts/run_rl_pipeline.py --out runs/rl --episodes 1000
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from gflow.cli import run  # noqa: E402

GEN_CFG = """\
[dataset]
n_episodes = {episodes}
flavor = {flavor}
seed = {seed}

[out]
dir = {out}/data
"""

IDM_CFG = """\
[idm]
dataset = {out}/data/dataset.gfck
widths = {idm_widths}
dropout = 0.1
lr = 1e-3
batch_size = 128
iterations = {idm_iterations}
seed = {seed}

[out]
dir = {out}/idm
"""

PLANNER_CFG = """\
[planner]
dataset = {out}/data/dataset.gfck
widths = {planner_widths}
n_freqs = 8

[train]
iterations = {planner_iterations}
batch_size = 64
lr = 1e-3
p_uncond = 0.25
seed = {seed}
log_every = {log_every}

[out]
dir = {out}/planner
"""

SWEEP_CFG = """\
[sweep]
planner = {out}/planner/planner.gfck
idm = {out}/idm/idm.gfck
dataset = {out}/data/dataset.gfck
omegas = 1.0,1.5,2.0,2.5
n_odes = 10
n_episodes = {eval_episodes}
seed = {seed}

[out]
dir = {out}/sweep
"""

PROBE_CFG = """\
[probe]
planner = {out}/planner/planner.gfck
dataset = {out}/data/dataset.gfck
omega = 2.0
n_ode = 10

[out]
dir = {out}/probe
"""


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/rl")
    ap.add_argument("--episodes", type=int, default=400)
    ap.add_argument("--flavor", default="mixed", choices=("mixed", "low_noise", "replay_heavy"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--idm-widths", default="64,64")
    ap.add_argument("--idm-iterations", type=int, default=3000)
    ap.add_argument("--planner-widths", default="128,128")
    ap.add_argument("--planner-iterations", type=int, default=8000)
    ap.add_argument("--eval-episodes", type=int, default=20)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stages = (
        (["rl", "gen-data"], "gen.cfg", GEN_CFG),
        (["rl", "train-idm"], "idm.cfg", IDM_CFG),
        (["rl", "train-planner"], "planner.cfg", PLANNER_CFG),
        (["rl", "sweep"], "sweep.cfg", SWEEP_CFG),
        (["rl", "probe"], "probe.cfg", PROBE_CFG),
    )
    fields = {
        "out": out,
        "episodes": args.episodes,
        "flavor": args.flavor,
        "seed": args.seed,
        "idm_widths": args.idm_widths,
        "idm_iterations": args.idm_iterations,
        "planner_widths": args.planner_widths,
        "planner_iterations": args.planner_iterations,
        "eval_episodes": args.eval_episodes,
        "log_every": max(args.planner_iterations // 20, 1),
    }
    for argv, name, template in stages:
        cfg = out / name
        cfg.write_text(template.format(**fields))
        rc = run(argv + ["--config", str(cfg)])
        if rc != 0:
            return rc
    print(f"done; sweep results in {out}/sweep/sweep.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
