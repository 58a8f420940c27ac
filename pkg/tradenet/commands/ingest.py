"""
ingest: validate an external index series and derive returns and losses
"""

import argparse
import logging
from pathlib import Path

from tradenet.commands.common import add_common_arguments, output_dir, resolve_config
from tradenet.services.ingest import read_series, returns_and_losses
from tradenet.storage import write_csv

logger = logging.getLogger(__name__)


def add_parser(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("ingest", help="Read a (date, value) CSV series")
    parser.add_argument("csv_path", type=str, help="Series CSV with a header row")
    add_common_arguments(parser, seed=False)
    parser.add_argument("--date-column", default="date", help="Name of the date column")
    parser.add_argument("--value-column", default="value", help="Name of the value column")
    parser.add_argument("--label", type=str, help="Series label, defaults to the file name")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    source = Path(args.csv_path)
    out = output_dir(args, config, fallback=source.parent)

    series = read_series(source, args.date_column, args.value_column, args.label)
    returns, losses = returns_and_losses(series)
    write_csv(returns, out / "returns.csv")
    write_csv(losses, out / "losses.csv")
    logger.info(f"'{series.label}': {len(returns)} returns, {len(losses)} losses")
    return 0
