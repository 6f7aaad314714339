"""Command line entry point: ``evita run|metrics|gen-table|inspect``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .harness import PROFILES, emit_plot_data, load_config, load_profile, recompute_metrics, run_experiment
from .instance import BENCHMARKS, load_benchmark, load_instance, summary_csv
from .logistics import ConfigError, GeneratorProfile, synth_inventory_table, table_to_csv


def _cmd_run(args) -> int:
    cfg = load_config(args.config) if args.config else load_profile(args.profile)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, master_seed=args.seed)
    out = run_experiment(cfg, args.output, workers=args.workers)
    warnings = emit_plot_data(out)
    manifest = json.loads((out / "manifest.json").read_text())
    print(f"{manifest['n_cells']} cells, {manifest['n_failed']} failed -> {out}")
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0 if manifest["n_failed"] == 0 else 1


def _cmd_metrics(args) -> int:
    warnings = recompute_metrics(args.result_dir)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(Path(args.result_dir) / "rpd_summary.csv")
    return 0


def _cmd_gen_table(args) -> int:
    n = args.shops
    if n is None:
        if args.instance is None:
            raise ConfigError("give --shops or --instance")
        n = _load(args.instance, args.distribution).n_shops
    text = table_to_csv(synth_inventory_table(args.seed, n, GeneratorProfile()))
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _load(ref: str, distribution: str):
    if ref in BENCHMARKS:
        return load_benchmark(ref)
    return load_instance(ref, distribution)


def _cmd_inspect(args) -> int:
    for k, ref in enumerate(args.instances):
        sys.stdout.write(summary_csv(_load(ref, args.distribution), header=k == 0))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="evita", description="Delivery pattern optimisation experiments.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment")
    src = r.add_mutually_exclusive_group()
    src.add_argument("--config", help="INI experiment file")
    src.add_argument("--profile", choices=PROFILES, default="smoke", help="built-in profile (default: smoke)")
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--seed", type=int, help="override the master seed")
    r.add_argument("--output", help="result directory (default: $EVITA_OUTPUT_DIR/<name>)")
    r.set_defaults(func=_cmd_run)

    m = sub.add_parser("metrics", help="recompute summaries and plot data of a result directory")
    m.add_argument("result_dir")
    m.set_defaults(func=_cmd_metrics)

    g = sub.add_parser("gen-table", help="emit a synthetic inventory table as CSV")
    g.add_argument("--shops", type=int)
    g.add_argument("--instance", help="benchmark id or instance file (sets the shop count)")
    g.add_argument("--distribution", default="unknown")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--output")
    g.set_defaults(func=_cmd_gen_table)

    i = sub.add_parser("inspect", help="print instance summaries, eccentricity included")
    i.add_argument("instances", nargs="+", help="benchmark ids or instance files")
    i.add_argument("--distribution", default="unknown")
    i.set_defaults(func=_cmd_inspect)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
