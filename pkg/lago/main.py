"""Command-line entry point for the LAGO toolkit."""

import argparse
import logging
import sys
from typing import List, Optional

from lago.commands import COMMANDS
from lago.config import settings
from lago.errors import LagoError, SolverError, UsageError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_SOLVER = 3


class LagoArgumentParser(argparse.ArgumentParser):
    """Argument parser that raises UsageError instead of exiting."""

    def error(self, message: str):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = LagoArgumentParser(
        prog="lago",
        description="Graph-constrained few-shot alignment of embedding spaces",
        allow_abbrev=False,
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Log solver progress")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=LagoArgumentParser)

    # Include commands
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def configure_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else getattr(logging, settings.log_level.upper(), logging.INFO)
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s %(message)s",
        stream=sys.stderr,
    )


def exit_code(error: BaseException) -> int:
    """Map an exception to the process exit code."""
    if isinstance(error, UsageError):
        return EXIT_USAGE
    if isinstance(error, SolverError):
        return EXIT_SOLVER
    return EXIT_DATA


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one subcommand.

    Returns:
        0 on success, 1 on usage errors, 2 on data errors, 3 on solver failures
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"lago: error: {e}", file=sys.stderr)
        return EXIT_USAGE

    configure_logging(args.verbose)
    try:
        return args.func(args)
    except (LagoError, OSError) as e:
        stage = getattr(e, "stage", None) or args.command
        print(f"lago {args.command}: error in stage '{stage}': {e}", file=sys.stderr)
        return exit_code(e)


if __name__ == "__main__":
    sys.exit(main())
