"""
var: empirical and Pareto-envelope Value-at-Risk of a loss series
"""

import argparse
import logging
from pathlib import Path
from typing import Any

from tradenet.commands.common import add_common_arguments, output_dir, resolve_config
from tradenet.exceptions import DomainError
from tradenet.schemas import VaRQuery
from tradenet.services import risk, tails
from tradenet.storage import read_series_column, write_json

logger = logging.getLogger(__name__)


def add_parser(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("var", help="Value-at-Risk with bounding exponents")
    parser.add_argument("losses_csv", type=str, help="CSV of positive losses")
    add_common_arguments(parser, seed=False)
    parser.add_argument("--column", default="loss", help="Loss column name")
    parser.add_argument("--alphas", type=str, help="Comma-separated confidence levels")
    parser.add_argument("--x-min", type=float, help="Pareto tail cutoff")
    parser.add_argument("--horizon", type=int, help="Horizon in steps (metadata)")
    parser.add_argument("--m-hat", type=float, help="Fitted tail exponent")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    config = resolve_config(
        args, risk={"alphas": args.alphas, "x_min": args.x_min, "horizon": args.horizon}
    )
    if args.m_hat is not None and args.m_hat <= 0.0:
        raise DomainError(f"--m-hat must be positive, got {args.m_hat}")
    source = Path(args.losses_csv)
    out = output_dir(args, config, fallback=source.parent)

    losses = risk.check_losses(read_series_column(source, args.column))
    x_min = config.risk.x_min
    x_min_source = "given"
    if x_min is None:
        x_min = tails.auto_s_min(losses)
        x_min_source = "90th percentile of losses"
        logger.info(f"x_min not given, using {x_min:.6g} ({x_min_source})")

    rows: list[dict[str, Any]] = []
    for alpha in config.risk.alphas:
        query = VaRQuery(alpha=alpha, horizon=config.risk.horizon, x_min=x_min)
        envelope = risk.var_envelope(query, args.m_hat)
        rows.append(
            {
                "query": query.model_dump(),
                "empirical_var": risk.empirical_var(losses, alpha),
                **envelope.model_dump(exclude_none=True),
            }
        )

    write_json(
        {
            "m_source": "fitted" if args.m_hat is not None else "bounds-only",
            "m_hat": args.m_hat,
            "x_min_source": x_min_source,
            "results": rows,
        },
        out / "var.json",
    )
    return 0
