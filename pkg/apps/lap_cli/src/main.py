"""Command-line entry point for the waveguide LAP solver."""

import argparse
import sys
from collections.abc import Sequence
from pathlib import Path

from shared import configure_logging
from waveguide import __version__

from .config import settings
from .runconfig import ConfigError, load_run_config
from .services import SERVICES, RunContext, run

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

COMMAND_HELP = {
    "dispersion": "band functions, crossings at k^2 and stop bands",
    "scan": "singularity indicator on a polar grid around the unit circle",
    "contour": "build and validate the integration contour",
    "solve-full": "LAP solution of the full-guide problem",
    "solve-half": "half-guide solution from Dirichlet data on Gamma_1",
    "oracle": "absorption-limit reference solution and comparison",
    "convergence": "error tables over quadrature nodes and mesh widths",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="waveguide-lap",
        description="Limiting absorption solutions for periodic 2-D waveguides",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="run configuration (INI)")
    common.add_argument(
        "--out", type=Path, help=f"output directory (default {settings.output_dir})"
    )
    common.add_argument("--threads", type=int, help=f"worker threads (default {settings.threads})")
    common.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        help=f"log level (default {settings.log_level})",
    )
    common.add_argument("--svg", action="store_true", help="also write SVG figures")

    commands = parser.add_subparsers(dest="command", metavar="command")
    for name in SERVICES:
        commands.add_parser(name, parents=[common], help=COMMAND_HELP[name])
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """
    Run one command.

    Returns:
        0 on success, 1 when the solver fails, 2 on usage or configuration errors
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if args.threads is not None and args.threads < 1:
        parser.error("--threads must be at least 1")

    logger = configure_logging(args.log_level or settings.log_level, json_format=settings.log_json)
    try:
        config = load_run_config(args.config)
    except ConfigError as exc:
        logger.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    context = RunContext(
        config=config,
        settings=settings,
        output_dir=args.out or settings.output_dir,
        threads=args.threads or settings.threads,
        write_svg=args.svg or settings.write_svg,
    )
    logger.info(
        "Running %s with %d threads into %s", args.command, context.threads, context.output_dir
    )
    result = run(args.command, context)

    for path in result.artifacts:
        logger.info("Wrote %s", path)
    if not result.success:
        print(f"error: {result.error_message}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
