"""Command-line entry points: run experiments, generate data, serve annotation."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .harness import experiment_config_from_dict, export_results, run_experiment
from .io import save_sample_graph
from .synthetic import SyntheticConfig, generate_synthetic


def _cmd_run(args) -> int:
    doc = json.loads(Path(args.config).read_text())
    cfg = experiment_config_from_dict(doc)
    result = run_experiment(cfg)
    paths = export_results(result, args.out)
    print(f"full baseline ({result.metric}): {result.full_baseline:.4f}")
    for name in sorted(result.strategies):
        s = result.strategies[name]
        final = s.mean_metric[-1] if s.mean_metric else float("nan")
        print(f"{name:>4}: final mean {final:.4f}  variance {s.final_variance:.6f}")
    for kind in sorted(paths):
        print(f"wrote {paths[kind]}")
    return 0


def _cmd_generate(args) -> int:
    overrides = json.loads(args.synthetic)
    cfg = SyntheticConfig(**overrides)
    sg = generate_synthetic(cfg)
    save_sample_graph(sg, args.out)
    print(f"wrote {args.out} ({len(sg)} samples, {len(sg.edges)} adjacencies)")
    return 0


def _cmd_serve(args) -> int:
    from .service import run_server

    run_server(
        args.graph,
        strategy=args.strategy,
        port=args.port,
        host=args.host,
        sessions_dir=args.sessions_dir,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alcurve",
        description="Batch active learning for path classification on spatial sample graphs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a multi-trial experiment from a config document")
    run_p.add_argument("--config", required=True, help="JSON experiment config")
    run_p.add_argument("--out", default="results", help="output directory (default: results)")
    run_p.set_defaults(func=_cmd_run)

    gen_p = sub.add_parser("generate", help="generate a synthetic dataset file")
    gen_p.add_argument(
        "--synthetic",
        default="{}",
        help='JSON overrides for the generator, e.g. \'{"n_points": 600, "seed": 3}\'',
    )
    gen_p.add_argument("--out", default="synthetic_graph.json")
    gen_p.set_defaults(func=_cmd_generate)

    srv_p = sub.add_parser("serve", help="serve the annotation HTTP API")
    srv_p.add_argument("--graph", required=True, help="graph file (sample or spatial format)")
    srv_p.add_argument("--strategy", default="dps", choices=["rs", "us", "qbc", "pps", "dps"])
    srv_p.add_argument("--port", type=int, default=8000)
    srv_p.add_argument("--host", default="127.0.0.1")
    srv_p.add_argument("--sessions-dir", default="alcurve_sessions")
    srv_p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
