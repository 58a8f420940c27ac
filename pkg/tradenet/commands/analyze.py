"""
analyze: tail exponents, band classification and topology tables for a
simulation run directory, a batch of seed_* runs or a returns CSV
"""

import argparse
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Optional

import numpy as np
import pandas as pd

from tradenet.commands.common import add_common_arguments, output_dir, resolve_config
from tradenet.config import get_settings
from tradenet.exceptions import EmptyInputError, InputFormatError, InsufficientTailError
from tradenet.schemas import AnalysisConfig, DegreeProfile, RunConfig, TailFit
from tradenet.services import metrics, tails
from tradenet.services.network import TradeNetwork
from tradenet.services.risk import bounding_ccdf
from tradenet.storage import (
    read_edge_list,
    read_series_column,
    read_snapshots,
    write_csv,
    write_json,
)

logger = logging.getLogger(__name__)

# Avalanche sizes and link losses are counts starting at 1
AVALANCHE_S_MIN = 1.0
# Degree-1 agents sit below the scaling region of the degree CCDF
DEGREE_S_MIN = 2.0


def add_parser(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("analyze", help="Fit tails and topology of a run")
    parser.add_argument("input", type=str, help="Run directory, batch directory or returns CSV")
    add_common_arguments(parser)
    parser.add_argument("--method", choices=["hill", "regression"], help="Tail estimator")
    parser.add_argument("--tail-fraction", type=float, help="Hill tail fraction")
    parser.add_argument("--s-min", type=float, help="Regression cutoff")
    parser.add_argument("--side", choices=["loss", "gain", "absolute"], help="Return tail")
    parser.add_argument("--column", default="log_return", help="Returns column name")
    parser.add_argument("--jobs", type=int, help="Worker processes for a batch directory")
    parser.set_defaults(handler=handle)


def _fit_summary(fit: TailFit) -> dict[str, Any]:
    bounds = tails.classify_bounds(fit.m_hat, fit.stderr)
    return {
        **fit.model_dump(),
        "gamma_implied": tails.gamma_from_m(fit.m_hat),
        "classification": bounds.classification,
        "band_note": bounds.note,
    }


def _fit_returns(returns: np.ndarray, cfg: AnalysisConfig) -> tuple[dict[str, Any], TailFit]:
    samples = tails.tail_samples(returns, cfg.tail_side)
    fit = tails.fit_tail(samples, cfg.method, cfg.tail_fraction, cfg.s_min)
    summary = _fit_summary(fit)
    summary["side"] = cfg.tail_side
    _, drift = tails.hill_diagnostic(samples)
    summary["diagnostic_note"] = drift
    logger.info(
        f"Return tail ({cfg.tail_side}): m_hat={fit.m_hat:.4g} +/- {fit.stderr:.2g}, "
        f"{summary['classification']}"
    )
    return summary, fit


def _write_bounds(returns: np.ndarray, x_min: float, path: Path) -> None:
    losses = tails.tail_samples(returns, "loss")
    if losses.size == 0:
        logger.warning("No losses in the series; bounds.csv not written")
        return
    points = tails.ccdf(losses)
    frame = bounding_ccdf(points.s, x_min, points.fraction)
    write_csv(frame[frame["s"] >= x_min], path)


def _profile_frame(profile: DegreeProfile, with_samples: bool = False) -> pd.DataFrame:
    frame = pd.DataFrame(
        {"k": [row.k for row in profile.rows], profile.name: [row.value for row in profile.rows]}
    )
    if with_samples:
        frame["samples"] = [row.samples for row in profile.rows]
    return frame


def _try(label: str, fn: Any, *args: Any) -> Any:
    try:
        return fn(*args)
    except (EmptyInputError, InsufficientTailError) as e:
        logger.warning(f"{label}: {e}")
        return None


def _degree_exponent(net: TradeNetwork, cfg: AnalysisConfig) -> Optional[dict[str, Any]]:
    degrees = metrics.degree_sequence(net, cfg.degree_mode)
    degrees = degrees[degrees > 0]
    if degrees.size == 0:
        logger.warning("Degree exponent: no linked agents")
        return None
    fit = _try(
        "Degree exponent", tails.fit_ccdf_regression, tails.ccdf(degrees), cfg.s_min or DEGREE_S_MIN
    )
    if fit is None:
        return None
    return {**fit.model_dump(), "gamma_hat": tails.degree_gamma(fit), "mode": cfg.degree_mode}


def _analyze_topology(run_dir: Path, net: TradeNetwork, config: RunConfig, out: Path) -> dict[str, Any]:
    report: dict[str, Any] = {"agents": net.n_agents, "links": net.link_count}

    mode = config.analysis.degree_mode
    snapshots = read_snapshots(run_dir)
    if snapshots:
        histogram = metrics.averaged_degree_distribution(snapshots, mode)
        report["averaged_over_snapshots"] = len(snapshots)
    else:
        histogram = metrics.degree_distribution(net, mode)
    report["degree_mode"] = mode
    write_csv(
        pd.DataFrame(
            [{"k": k, "count": b.count, "p": b.p} for k, b in sorted(histogram.entries.items())]
        ),
        out / "pk.csv",
    )

    correlation = _try("D(k)", metrics.degree_correlation, net)
    clustering = _try("C(k)", metrics.clustering_by_degree, net)
    paths = _try(
        "l(k)", metrics.path_length_by_degree, net, config.analysis.path_samples, config.seed
    )
    if correlation is not None:
        write_csv(_profile_frame(correlation), out / "dk.csv")
        report["d_flatness"] = _try("D(k) flatness", metrics.profile_flatness, correlation)
    if clustering is not None:
        write_csv(_profile_frame(clustering), out / "ck.csv")
        report["c_flatness"] = _try("C(k) flatness", metrics.profile_flatness, clustering)
        report["c_flagged_k"] = clustering.flagged
    if paths is not None:
        write_csv(_profile_frame(paths, with_samples=True), out / "lk.csv")
        trend = _try("l(k) trend", metrics.path_length_trend, paths)
        report["path_trend"] = trend.model_dump() if trend else None

    report["degree_fit"] = _degree_exponent(net, config.analysis)
    return report


def _analyze_avalanches(run_dir: Path, cfg: AnalysisConfig) -> dict[str, Any]:
    frame = pd.read_csv(run_dir / "avalanches.csv")
    report: dict[str, Any] = {"count": len(frame)}
    s_min = cfg.s_min or AVALANCHE_S_MIN
    for column in ("r", "k_t"):
        values = frame[column].to_numpy(dtype=float)
        values = values[values > 0]
        fit = None
        if values.size:
            fit = _try(f"Avalanche {column}", tails.fit_ccdf_regression, tails.ccdf(values), s_min)
        report[column] = (
            {**fit.model_dump(), "density_exponent": fit.m_hat + 1.0} if fit else None
        )
    scaling = _try(
        "Size scaling", tails.size_scaling, frame["r"].to_numpy(), frame["k_t"].to_numpy()
    )
    report["size_scaling"] = scaling.model_dump() if scaling else None
    return report


def analyze_run(source: Path, out: Path, config: RunConfig, column: str) -> dict[str, Any]:
    """
    Fit one run directory or returns CSV and write its reports into out

    Returns:
        The return-tail summary written to tailfit.json
    """
    run_dir = source if source.is_dir() else None
    returns_path = source / "returns.csv" if run_dir else source

    returns = read_series_column(returns_path, column)
    summary, fit = _fit_returns(returns, config.analysis)

    if run_dir is not None:
        net = read_edge_list(run_dir / "network.tsv", config.dynamics.growth)
        topology = _analyze_topology(run_dir, net, config, out)
        write_json(topology, out / "topology.json")

        degree_fit = topology.get("degree_fit")
        if degree_fit:
            expected = tails.m_from_gamma(degree_fit["gamma_hat"])
            summary["bridge"] = {
                "gamma_hat": degree_fit["gamma_hat"],
                "m_expected": expected,
                "deviation": abs(fit.m_hat - expected),
            }

        avalanches = _analyze_avalanches(run_dir, config.analysis)
        avalanches["bridge"] = summary.get("bridge")
        write_json(avalanches, out / "avalanche_tails.json")

    write_json(summary, out / "tailfit.json")
    _write_bounds(returns, config.risk.x_min or fit.s_min, out / "bounds.csv")
    return summary


def replica_dirs(source: Path) -> list[Path]:
    """seed_<s> run directories of a batch written by simulate --seeds"""
    if not source.is_dir() or (source / "returns.csv").is_file():
        return []
    return sorted(
        (p for p in source.glob("seed_*") if (p / "returns.csv").is_file()),
        key=lambda p: p.name,
    )


def _analyze_batch(
    replicas: list[Path], out: Optional[Path], config: RunConfig, column: str, jobs: int
) -> list[dict[str, Any]]:
    outs = [out / replica.name if out else replica for replica in replicas]
    if jobs <= 1 or len(replicas) <= 1:
        return [analyze_run(r, o, config, column) for r, o in zip(replicas, outs)]
    n = len(replicas)
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(analyze_run, replicas, outs, [config] * n, [column] * n))


def handle(args: argparse.Namespace) -> int:
    config = resolve_config(
        args,
        analysis={
            "method": args.method,
            "tail_fraction": args.tail_fraction,
            "s_min": args.s_min,
            "tail_side": args.side,
        },
    )
    source = Path(args.input)
    if not source.exists():
        raise InputFormatError(str(source), "input not found")

    replicas = replica_dirs(source)
    if not replicas:
        if source.is_dir() and not (source / "returns.csv").is_file():
            raise InputFormatError(str(source), "not a run directory or a batch of seed_* runs")
        run_dir = source if source.is_dir() else None
        out = output_dir(args, config, fallback=run_dir or source.parent)
        analyze_run(source, out, config, args.column)
        return 0

    jobs = args.jobs or get_settings().default_jobs
    logger.info(f"Analyzing {len(replicas)} replicas with {jobs} workers")
    out = Path(args.out) if args.out else None
    summaries = _analyze_batch(replicas, out, config, args.column, jobs)
    write_csv(
        pd.DataFrame(
            [
                {
                    "replica": replica.name,
                    "m_hat": summary["m_hat"],
                    "stderr": summary["stderr"],
                    "classification": summary["classification"],
                    "gamma_hat": (summary.get("bridge") or {}).get("gamma_hat"),
                    "bridge_deviation": (summary.get("bridge") or {}).get("deviation"),
                }
                for replica, summary in zip(replicas, summaries)
            ]
        ),
        (out or source) / "batch_summary.csv",
    )
    return 0
