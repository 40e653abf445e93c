#!/usr/bin/env python3
"""Full-resolution dissimilarity/Lyapunov map: 50 initial points, 1e6 steps per cell.

This is the long-running recipe (hours on one core); the acceptance suite
uses the reduced settings instead. Grid and model are overridable the same
way as the CLI.
"""

import argparse

from trotterlab.sweep import SweepConfig, run


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=int, default=2)
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--grid", type=int, default=96, help="cells per axis")
    ap.add_argument("--seed", type=int, default=20240901)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--out", type=str, default="heatmap_full.csv")
    args = ap.parse_args()

    cfg = SweepConfig(
        mode="heatmap",
        p=args.p,
        n=args.n,
        s_min=0.02,
        s_max=0.98,
        s_steps=args.grid,
        tau_min=0.1,
        tau_max=8.0,
        tau_steps=args.grid,
        lyap_points=50,
        lyap_steps=1_000_000,
        seed=args.seed,
        workers=args.workers,
        out=args.out,
    )
    run(cfg)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
