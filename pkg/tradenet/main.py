"""
Command-line entry point
"""

import argparse
import logging
from typing import Optional, Sequence

from pydantic import ValidationError

from tradenet import __version__
from tradenet.commands import analyze, ingest, renorm, simulate, var
from tradenet.config import get_settings
from tradenet.exceptions import (
    ConfigurationError,
    DataValidationError,
    DomainError,
    EmptyInputError,
    InputFormatError,
    InsufficientDataError,
    InsufficientTailError,
    TradeNetError,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_DATA = 4

# Checked in order; the first matching family decides the exit status
EXIT_CODES: list[tuple[tuple[type[BaseException], ...], int]] = [
    ((ConfigurationError, DomainError, ValidationError), EXIT_CONFIG),
    ((InputFormatError, EmptyInputError, InsufficientTailError, OSError), EXIT_INPUT),
    ((DataValidationError, InsufficientDataError), EXIT_DATA),
]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tradenet",
        description="Evolving trade-network simulator with tail and risk analysis",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in (simulate, analyze, ingest, renorm, var):
        command.add_parser(subparsers)
    return parser


def exit_code(error: BaseException) -> int:
    for families, code in EXIT_CODES:
        if isinstance(error, families):
            return code
    return EXIT_FAILURE


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments, run one command and map its failure to an exit status

    Returns:
        0 on success, 2 for configuration or usage errors, 3 for unreadable
        or insufficient input, 4 for data-validation failures
    """
    args = build_parser().parse_args(argv)
    settings = get_settings()

    # Configure logging
    logging.basicConfig(
        level=settings.log_level.upper(),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    logger.info(f"Starting {settings.app_name} {args.command}")
    try:
        status = int(args.handler(args))
    except (TradeNetError, ValidationError, OSError) as e:
        code = exit_code(e)
        logger.error(f"{args.command} failed: {e}")
        return code
    logger.info(f"Finished {args.command}")
    return status
