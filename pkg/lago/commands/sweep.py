"""sweep command: run an experiment for each value of one parameter."""

import argparse
import asyncio

from lago.commands.options import add_experiment_options, overrides_from_args
from lago.commands.solve import print_summary
from lago.services.experiment import SWEEP_PARAMS, load_config, stage
from lago.services.runner import run_experiment


def register(subparsers) -> None:
    parser = subparsers.add_parser("sweep", help="Sweep one parameter", allow_abbrev=False)
    add_experiment_options(parser)
    parser.add_argument("--param", choices=SWEEP_PARAMS, required=True)
    parser.add_argument("--values", type=float, nargs="+", required=True)
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    """Every (value, seed) pair becomes one job; the report holds one row per node."""
    with stage("load", {}):
        config = load_config(args.config, overrides_from_args(args))
    report, written = asyncio.run(run_experiment(config, args.param, args.values))
    print_summary(report)
    print(written["report.json"])
    return 0
