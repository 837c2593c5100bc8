#!/usr/bin/env python3
"""Time guided sampling against the number of field evaluations and report
the linear fit. Mirrors the wall-time-vs-NFE measurement protocol.

    python3 scripts/run_bench.py --out runs/bench --replications 100
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from gflow.cli import run  # noqa: E402

BENCH_CFG = """\
[bench]
d = {d}
widths = {widths}
n_odes = {n_odes}
solver = {solver}
replications = {replications}
seed = {seed}

[out]
dir = {out}
"""


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/bench")
    ap.add_argument("--d", type=int, default=256)
    ap.add_argument("--widths", default="256,256")
    ap.add_argument("--n-odes", default="2,10,50,100,200")
    ap.add_argument("--solver", default="euler", choices=("euler", "midpoint"))
    ap.add_argument("--replications", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = out / "bench.cfg"
    cfg.write_text(
        BENCH_CFG.format(
            out=out,
            d=args.d,
            widths=args.widths,
            n_odes=args.n_odes,
            solver=args.solver,
            replications=args.replications,
            seed=args.seed,
        )
    )
    return run(["bench", "--config", str(cfg)])


if __name__ == "__main__":
    sys.exit(main())
