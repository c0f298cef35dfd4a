"""Map where in feature space each strategy spends its queries.

Re-runs a short experiment, bins the feature-space positions of every
queried sample on a rectangular grid, and writes one heat-map CSV per
strategy.  Random sampling should fill the plane; density-weighted
querying should concentrate along the class boundary.

Usage:
    python3 scripts/query_density_heatmap.py --trials 5 --out results/heatmaps
"""

import argparse
import logging
from pathlib import Path

from alcurve.harness import ExperimentConfig, run_experiment
from alcurve.io import write_heatmap_csv
from alcurve.synthetic import GridSpec, accumulate_heatmap, generate_synthetic


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--strategies", nargs="+", default=["rs", "us", "pps", "dps"])
    parser.add_argument("--trials", type=int, default=5)
    parser.add_argument("--budget", type=int, default=100)
    parser.add_argument("--bins", type=int, default=32)
    parser.add_argument("--master-seed", type=int, default=0)
    parser.add_argument("--out", default="results/heatmaps")
    args = parser.parse_args()

    cfg = ExperimentConfig(
        strategies=tuple(args.strategies),
        trials=args.trials,
        budget=args.budget,
        master_seed=args.master_seed,
    )
    result = run_experiment(cfg)

    # the generator is deterministic per config, so positions can be rebuilt
    sg = generate_synthetic(cfg.synthetic)
    pos = sg.positions
    pad = 1e-9
    grid = GridSpec(
        x_min=float(pos[:, 0].min()) - pad,
        x_max=float(pos[:, 0].max()) + pad,
        y_min=float(pos[:, 1].min()) - pad,
        y_max=float(pos[:, 1].max()) + pad,
        nx=args.bins,
        ny=args.bins,
    )

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in cfg.strategies:
        points = [
            pos[i]
            for curve in result.strategies[name].curves
            for q in curve.queries
            for i in q.batch.indices
        ]
        hm = accumulate_heatmap(points, grid)
        path = out / f"heatmap_{name}.csv"
        write_heatmap_csv(hm, path)
        print(f"{name:>4}: {hm.total} queries binned -> {path}")
    return 0


if __name__ == "__main__":
    logging.basicConfig(level=logging.WARNING)
    raise SystemExit(main())
