"""Command-line entry point for Monte Carlo experiments."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ALGORITHMS, SWEEP_VARS, ExperimentConfig
from .metrics import emit_all
from .runner import run_experiment


def parse_sweep(text: str) -> tuple:
    var, sep, values = text.partition("=")
    if not sep or var not in SWEEP_VARS:
        raise argparse.ArgumentTypeError(f"expected VAR=v1,v2,... with VAR in {SWEEP_VARS}")
    try:
        vals = tuple(int(v) for v in values.split(",") if v)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if not vals:
        raise argparse.ArgumentTypeError("sweep needs at least one value")
    return var, vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="v2vrrm-experiment", description="Run V2V scheduling experiments and write CSVs.")
    p.add_argument("--config", type=Path, help="YAML file with ExperimentConfig fields")
    p.add_argument("--seed", type=int, help="root seed (unsigned 64-bit)")
    p.add_argument("--trials", type=int, help="trials per sweep value")
    p.add_argument("--algorithms", help=f"comma-separated subset of {','.join(ALGORITHMS)}")
    p.add_argument("--sweep", type=parse_sweep, help="e.g. T=4,6,8")
    p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    p.add_argument("--dump-lp", type=Path, help="write every group MBLP as an LP file here")
    p.add_argument("--scope", choices=("all", "middle"), default="all", help="clusters to schedule")
    p.add_argument("--time-limit", type=float, help="per-group solver time limit in seconds")
    p.add_argument("--dump-config", action="store_true", help="print the effective config and exit")
    p.add_argument("-q", "--quiet", action="store_true")
    return p


def config_from_args(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.algorithms:
        changes["algorithms"] = tuple(a.strip() for a in args.algorithms.split(",") if a.strip())
    if args.sweep:
        changes["sweep_var"], changes["sweep_values"] = args.sweep
    if args.time_limit is not None:
        changes["time_limit_s"] = args.time_limit
    return cfg.replace(**changes) if changes else cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (ValueError, OSError) as exc:
        parser.error(str(exc))
    if args.dump_config:
        sys.stdout.write(cfg.dump())
        return 0
    log = None if args.quiet else (lambda msg: print(msg, file=sys.stderr, flush=True))
    table = run_experiment(cfg, scope=args.scope, dump_lp=args.dump_lp, progress=log)
    try:
        paths = emit_all(table, args.out)
    except OSError as exc:
        print(f"cannot write results: {exc}", file=sys.stderr)
        return 1
    if not args.quiet:
        for a in cfg.algorithms:
            means = ", ".join(f"{cfg.sweep_var}={v}: {table.mean_connectivity(a, v):.3f}" for v in cfg.sweep_values)
            print(f"{a:20s} {means}")
        print(f"wrote {len(paths)} files to {args.out}")
    return 0
