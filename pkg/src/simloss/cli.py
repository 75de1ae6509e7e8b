"""Command line entry point: ``simloss run | analyze | gen-data``.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

import argparse
import json
import logging
import os
import sys

from . import data as data_mod
from .errors import ConfigError, InvalidParameterError
from .harness import ExperimentConfig, analyze_distributions, emit_report, run_experiment

log = logging.getLogger("simloss")


def _parser():
    p = argparse.ArgumentParser(prog="simloss", description="SimLoss experiment harness")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a grid-search experiment")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--format", choices=("json", "markdown", "both"), default="both")
    run.add_argument("--jobs", type=int, default=1)

    an = sub.add_parser("analyze", help="run an ordinal experiment and summarise output distributions")
    an.add_argument("--config", required=True)
    an.add_argument("--out", required=True)
    an.add_argument("--target-class", type=int, default=None)
    an.add_argument("--threshold", type=float, default=0.01)
    an.add_argument("--jobs", type=int, default=1)

    gen = sub.add_parser("gen-data", help="write a synthetic dataset as CSV")
    gen.add_argument("--task", choices=("ordinal", "grouped"), required=True)
    gen.add_argument("--out", required=True, help="CSV path")
    gen.add_argument("--embeddings", help="embedding file path (grouped task)")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--class-count", type=int, default=30)
    gen.add_argument("--per-class", type=int, default=None)
    gen.add_argument("--noise-sigma", type=float, default=0.5)
    gen.add_argument("--class-ratio", type=float, default=None)
    gen.add_argument("--group-count", type=int, default=5)
    gen.add_argument("--classes-per-group", type=int, default=4)
    gen.add_argument("--embed-dim", type=int, default=16)
    gen.add_argument("--within-sigma", type=float, default=0.3)
    gen.add_argument("--feature-sigma", type=float, default=0.3)
    return p


def _cmd_run(args):
    config = ExperimentConfig.load(args.config)
    os.makedirs(args.out, exist_ok=True)
    report, _, _ = run_experiment(config, jobs=args.jobs)
    if args.format in ("json", "both"):
        emit_report(report, os.path.join(args.out, "report.json"), "json")
    if args.format in ("markdown", "both"):
        emit_report(report, os.path.join(args.out, "report.md"), "markdown")
    log.info("wrote report to %s", args.out)


def _cmd_analyze(args):
    config = ExperimentConfig.load(args.config)
    if config.technique != "order":
        raise ConfigError("analyze needs an ordinal task (order-matrix technique)")
    os.makedirs(args.out, exist_ok=True)
    report, prepared, results = run_experiment(config, jobs=args.jobs)
    analysis = analyze_distributions(config, prepared, results, args.target_class, args.threshold)
    emit_report(report, os.path.join(args.out, "report.json"), "json")
    with open(os.path.join(args.out, "distributions.json"), "w", encoding="utf-8") as fh:
        json.dump(analysis, fh, indent=2)
        fh.write("\n")


def _cmd_gen_data(args):
    if args.task == "ordinal":
        ds = data_mod.synth_ordinal(
            args.class_count, args.per_class or 200, args.noise_sigma, args.seed, args.class_ratio
        )
        table = None
    else:
        ds, table = data_mod.synth_grouped(
            args.group_count, args.classes_per_group, args.per_class or 150, args.embed_dim,
            args.within_sigma, args.feature_sigma, args.seed,
        )
    data_mod.save_csv(ds, args.out)
    if args.embeddings:
        if table is None:
            raise ConfigError("--embeddings only applies to the grouped task")
        data_mod.save_embeddings(table, args.embeddings)


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handler = {"run": _cmd_run, "analyze": _cmd_analyze, "gen-data": _cmd_gen_data}[args.command]
    try:
        handler(args)
    except (ConfigError, InvalidParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
