"""
renorm: box-counting dimensions of an edge list and the gamma they predict
"""

import argparse
import logging
from pathlib import Path
from typing import Any

import pandas as pd

from tradenet.commands.common import add_common_arguments, output_dir, resolve_config
from tradenet.config import get_settings
from tradenet.exceptions import InsufficientTailError
from tradenet.services import metrics, renorm, tails
from tradenet.services.network import undirected_projection
from tradenet.storage import read_edge_list, write_csv, write_json

logger = logging.getLogger(__name__)

# Classification band for the predicted degree exponent
GAMMA_MIN = 2.0
GAMMA_MAX = 3.0


def add_parser(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("renorm", help="Box-covering fractal dimensions")
    parser.add_argument("edge_list", type=str, help="Edge list (src dst [weight] per line)")
    add_common_arguments(parser)
    parser.add_argument("--scales", type=str, help="Comma-separated box scales l_B")
    parser.add_argument("--cover-seeds", type=int, help="Covers per scale")
    parser.add_argument("--restarts", type=int, help="Greedy passes per cover")
    parser.add_argument("--jobs", type=int, help="Worker processes")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    config = resolve_config(
        args,
        renorm={
            "scales": args.scales,
            "cover_seeds": args.cover_seeds,
            "restarts": args.restarts,
        },
    )
    source = Path(args.edge_list)
    out = output_dir(args, config, fallback=source.parent)

    net = read_edge_list(source, config.dynamics.growth)
    graph = undirected_projection(net)
    fit = renorm.fractal_dimensions(
        graph,
        config.renorm.scales,
        config.seed,
        config.renorm.cover_seeds,
        config.renorm.restarts,
        args.jobs or get_settings().default_jobs,
    )

    write_csv(
        pd.DataFrame(
            {
                "l_b": fit.scales,
                "n_p_mean": fit.n_p,
                "n_p_std": fit.n_p_std,
                "k_p_mean": fit.k_p,
            }
        ),
        out / "renorm.csv",
    )

    report: dict[str, Any] = {
        "d_b": fit.d_b,
        "d_k": fit.d_k,
        "r2_b": fit.r2_b,
        "r2_k": fit.r2_k,
        "k_max": fit.k_max,
        "degenerate": fit.degenerate,
        "note": fit.note,
        "gamma_predicted": None,
        "gamma_band_check": None,
        "gamma_fitted": None,
    }
    if fit.d_b is not None and fit.d_k is not None and fit.d_k > 0.0:
        gamma = renorm.gamma_prediction(fit.d_b, fit.d_k)
        band = tails.classify_bounds(gamma, 0.0, GAMMA_MIN, GAMMA_MAX)
        report["gamma_predicted"] = gamma
        report["gamma_band_check"] = band.classification
        logger.info(f"gamma predicted {gamma:.4g} ({band.classification} [2, 3])")

    degrees = metrics.degree_sequence(net, "total")
    degrees = degrees[degrees > 0]
    try:
        if degrees.size:
            degree_fit = tails.fit_ccdf_regression(tails.ccdf(degrees), 2.0)
            report["gamma_fitted"] = tails.degree_gamma(degree_fit)
    except InsufficientTailError as e:
        logger.warning(f"No direct degree exponent: {e}")

    write_json(report, out / "renorm.json")
    return 0
