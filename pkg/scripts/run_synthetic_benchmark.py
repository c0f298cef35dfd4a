"""Run the synthetic benchmark and export learning curves.

Defaults reproduce the headline comparison: five strategies, 30 trials,
budget 100, pair batches.  Lower --trials for a quick look.

Usage:
    python3 scripts/run_synthetic_benchmark.py --out results/benchmark
    python3 scripts/run_synthetic_benchmark.py --trials 5 --strategies dps rs
"""

import argparse
import logging
import time

from alcurve.harness import ExperimentConfig, export_results, run_experiment
from alcurve.synthetic import SyntheticConfig


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=30)
    parser.add_argument("--budget", type=int, default=100)
    parser.add_argument("--k", type=int, default=2, help="batch size (1..3)")
    parser.add_argument("--metric", default="accuracy", choices=["accuracy", "voc"])
    parser.add_argument(
        "--strategies", nargs="+", default=["rs", "us", "qbc", "pps", "dps"]
    )
    parser.add_argument("--n-points", type=int, default=SyntheticConfig().n_points)
    parser.add_argument("--noise", type=float, default=SyntheticConfig().noise_sigma)
    parser.add_argument("--master-seed", type=int, default=0)
    parser.add_argument("--out", default="results/benchmark")
    args = parser.parse_args()

    cfg = ExperimentConfig(
        synthetic=SyntheticConfig(n_points=args.n_points, noise_sigma=args.noise),
        strategies=tuple(args.strategies),
        trials=args.trials,
        budget=args.budget,
        k=args.k,
        metric=args.metric,
        master_seed=args.master_seed,
    )
    t0 = time.perf_counter()
    result = run_experiment(cfg)
    elapsed = time.perf_counter() - t0

    print(f"full baseline ({result.metric}): {result.full_baseline:.4f}")
    for name in cfg.strategies:
        s = result.strategies[name]
        print(
            f"{name:>4}: final mean {s.mean_metric[-1]:.4f}"
            f"  variance {s.final_variance:.2e}"
            f"  ({len(s.curves)} trials)"
        )
    paths = export_results(result, args.out)
    for kind in sorted(paths):
        print(f"wrote {paths[kind]}")
    print(f"done in {elapsed:.1f} s")
    return 0


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    raise SystemExit(main())
