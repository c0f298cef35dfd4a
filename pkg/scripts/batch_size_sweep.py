"""Sweep the query batch size and compare final accuracy.

Runs the same experiment at k = 1, 2, 3 (by default) and prints the final
mean metric per size, plus a CSV for plotting.

Usage:
    python3 scripts/batch_size_sweep.py --trials 10 --out results/sweep
"""

import argparse
import csv
import logging
from pathlib import Path

from alcurve.harness import ExperimentConfig, run_experiment


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[1, 2, 3])
    parser.add_argument("--trials", type=int, default=10)
    parser.add_argument("--budget", type=int, default=100)
    parser.add_argument("--strategies", nargs="+", default=["dps"])
    parser.add_argument("--master-seed", type=int, default=0)
    parser.add_argument("--out", default="results/sweep")
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for k in args.sizes:
        cfg = ExperimentConfig(
            strategies=tuple(args.strategies),
            trials=args.trials,
            budget=args.budget,
            k=k,
            master_seed=args.master_seed,
        )
        result = run_experiment(cfg)
        for name in cfg.strategies:
            s = result.strategies[name]
            rows.append((k, name, s.mean_metric[-1], s.final_variance))
            print(f"k={k} {name:>4}: final mean {s.mean_metric[-1]:.4f}"
                  f"  variance {s.final_variance:.2e}")

    path = out / "sweep.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "strategy", "final_mean", "final_variance"])
        for row in rows:
            w.writerow([row[0], row[1], repr(row[2]), repr(row[3])])
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    logging.basicConfig(level=logging.WARNING)
    raise SystemExit(main())
