"""solve command: run one experiment configuration over its seeds."""

import argparse
import asyncio
import logging

from lago.commands.options import add_experiment_options, overrides_from_args
from lago.services.experiment import load_config, stage
from lago.services.runner import ExperimentReport, run_experiment

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("solve", help="Run an experiment", allow_abbrev=False)
    add_experiment_options(parser)
    parser.set_defaults(func=run)


def print_summary(report: ExperimentReport) -> None:
    for row in report.aggregates():
        prefix = f"{report.sweep_param}={row['sweep_value']} " if report.sweep_param else ""
        print(
            f"{prefix}method={report.config.method} seeds={row['seeds']} "
            f"mean_cosine={row['mean_cosine_mean']:.4f}+-{row['mean_cosine_std']:.4f} "
            f"test_rel_error={row['test_rel_error_mean']:.4f}"
        )


def run(args: argparse.Namespace) -> int:
    with stage("load", {}):
        config = load_config(args.config, overrides_from_args(args))
    report, written = asyncio.run(run_experiment(config))
    print_summary(report)
    print(written["report.json"])
    return 0
