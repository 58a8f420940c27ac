"""
File persistence: CSV tables, JSON reports and edge-list snapshots
"""

import json
import logging
import math
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from tradenet import __version__
from tradenet.exceptions import EmptyInputError, InputFormatError
from tradenet.schemas import GrowthConfig, RunConfig, SimulationOutput, TopologySnapshot
from tradenet.services.network import TradeNetwork

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"
EDGE_HEADER = "# agents={agents} links={links} step={step}"


def _round(value: Any) -> Any:
    """Floats to 12 significant digits, NaN and infinities to null"""
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return None
        return float(f"{value:.12g}")
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, dict):
        return {str(k): _round(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_round(v) for v in value]
    return value


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def write_json(data: Any, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_round(data), indent=2, sort_keys=True) + "\n")
    logger.info(f"Wrote {path}")
    return path


def write_edge_list(net: TradeNetwork, path: Path) -> Path:
    """Live links as producer, consumer, weight under a size header"""
    src, dst, weight = net.link_arrays()
    order = np.lexsort((dst, src))
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as handle:
        handle.write(
            EDGE_HEADER.format(agents=net.n_agents, links=net.link_count, step=net.step) + "\n"
        )
        for i in order.tolist():
            handle.write(f"{src[i]}\t{dst[i]}\t{weight[i]:.12g}\n")
    logger.info(f"Wrote {net.link_count} links to {path}")
    return path


def _parse_header(line: str) -> dict[str, int]:
    fields = {}
    for token in line.lstrip("#").split():
        key, _, value = token.partition("=")
        fields[key] = int(value)
    return fields


def read_edge_list(path: str | Path, cfg: GrowthConfig | None = None) -> TradeNetwork:
    """
    Rebuild a network from an edge list. Lines are `src dst [weight]`,
    whitespace separated; `#` lines are comments and an
    `# agents=N links=L step=t` header restores isolated agents and the
    step counter.

    Raises:
        InputFormatError: If the file is missing, a line cannot be parsed, or
            a line repeats a link or links an agent to itself
    """
    path = Path(path)
    if not path.is_file():
        raise InputFormatError(str(path), "edge list not found")

    cfg = cfg or GrowthConfig()
    net = TradeNetwork(cfg, np.random.default_rng(0))
    edges: list[tuple[int, int, float | None, int]] = []
    declared_agents = 0

    with path.open() as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "agents=" in line:
                    try:
                        header = _parse_header(line)
                    except ValueError as e:
                        raise InputFormatError(str(path), "bad header", line=line_no) from e
                    declared_agents = header.get("agents", 0)
                    net.step = header.get("step", 0)
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise InputFormatError(str(path), f"expected 2 or 3 fields, got {len(parts)}", line_no)
            try:
                src, dst = int(parts[0]), int(parts[1])
                weight = float(parts[2]) if len(parts) == 3 else None
            except ValueError as e:
                raise InputFormatError(str(path), f"unparseable link '{line}'", line_no) from e
            if src < 0 or dst < 0 or (weight is not None and weight <= 0.0):
                raise InputFormatError(str(path), f"invalid link '{line}'", line_no)
            edges.append((src, dst, weight, line_no))

    n_agents = max([declared_agents] + [max(s, d) + 1 for s, d, _, _ in edges])
    for _ in range(n_agents):
        net.add_agent()
    for src, dst, weight, line_no in edges:
        if not net.add_link(src, dst, weight):
            reason = "self-loop" if src == dst else "duplicate link"
            raise InputFormatError(str(path), f"{reason} {src} -> {dst}", line_no)
    logger.info(f"Read {net.link_count} links over {net.n_agents} agents from {path}")
    return net


def read_series_column(path: str | Path, column: str) -> np.ndarray:
    """
    One numeric column of a CSV with a header row; empty cells are NaN

    Raises:
        InputFormatError: If the file or column is missing or a cell is not numeric
        EmptyInputError: If there are no data rows
    """
    path = Path(path)
    if not path.is_file():
        raise InputFormatError(str(path), "file not found")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError as e:
        raise EmptyInputError(f"{path}: no data") from e
    except pd.errors.ParserError as e:
        raise InputFormatError(str(path), f"unreadable CSV ({e})") from e

    if column not in frame.columns:
        raise InputFormatError(str(path), f"missing column '{column}'", line=1)
    if frame.empty:
        raise EmptyInputError(f"{path}: no data rows")

    values = np.empty(len(frame))
    for index, cell in enumerate(frame[column]):
        text = cell.strip()
        if text == "" or text.lower() == "nan":
            values[index] = np.nan
            continue
        try:
            values[index] = float(text)
        except ValueError as e:
            raise InputFormatError(str(path), f"non-numeric '{cell}'", line=index + 2) from e
    return values


def write_simulation(output: SimulationOutput, config: RunConfig, out_dir: Path) -> list[Path]:
    """
    Write ut.csv, returns.csv, avalanches.csv, run.json, network.tsv and,
    when snapshots were taken, snapshots.csv

    Returns:
        Paths written
    """
    steps = np.arange(len(output.u_t))
    records = output.avalanches
    written = [
        write_csv(pd.DataFrame({"step": steps, "u_t": output.u_t}), out_dir / "ut.csv"),
        write_csv(
            pd.DataFrame({"step": steps[1:], "log_return": output.returns}),
            out_dir / "returns.csv",
        ),
        write_csv(
            pd.DataFrame(
                {
                    "step": [a.step for a in records],
                    "r": [a.r for a in records],
                    "k_t": [a.k_t for a in records],
                    "seed_agent": [a.seed_agent for a in records],
                },
                dtype=np.int64,
            ),
            out_dir / "avalanches.csv",
        ),
    ]

    if output.snapshots:
        written.append(
            write_csv(
                pd.DataFrame(
                    [
                        s.model_dump(exclude={"in_degrees", "out_degrees"})
                        for s in output.snapshots
                    ]
                ),
                out_dir / "snapshots.csv",
            )
        )
        written.append(
            write_json(
                {
                    str(s.step): {"in": s.in_degrees, "out": s.out_degrees}
                    for s in output.snapshots
                },
                out_dir / "snapshot_degrees.json",
            )
        )

    net = output.final_network
    written.append(write_edge_list(net, out_dir / "network.tsv"))
    written.append(
        write_json(
            {
                "version": __version__,
                "seed": output.seed,
                "config": config.model_dump(),
                "totals": {
                    "steps": len(output.u_t) - 1,
                    "agents": net.n_agents,
                    "links": net.link_count,
                    "avalanches": len(records),
                    "collapsed_agents": sum(a.r for a in records),
                    "links_destroyed": sum(a.k_t for a in records),
                    "discharged": sum(report.discharged for report in output.reports),
                },
            },
            out_dir / "run.json",
        )
    )
    return written



def read_snapshots(run_dir: Path) -> list[TopologySnapshot]:
    """
    Snapshots of a run directory from snapshots.csv and
    snapshot_degrees.json; empty when the run took none

    Raises:
        InputFormatError: If the two files are unreadable or disagree
    """
    degrees_path = run_dir / "snapshot_degrees.json"
    table_path = run_dir / "snapshots.csv"
    if not degrees_path.is_file():
        return []
    try:
        degrees = json.loads(degrees_path.read_text())
        table = pd.read_csv(table_path)
    except (OSError, ValueError) as e:
        raise InputFormatError(str(run_dir), f"unreadable snapshots ({e})") from e

    snapshots = []
    for row in table.to_dict("records"):
        entry = degrees.get(str(int(row["step"])))
        if not isinstance(entry, dict) or set(entry) != {"in", "out"}:
            raise InputFormatError(str(degrees_path), f"no degrees for step {row['step']}")
        snapshots.append(
            TopologySnapshot(
                step=int(row["step"]),
                agents=int(row["agents"]),
                links=int(row["links"]),
                u_t=float(row["u_t"]),
                in_degrees=entry["in"],
                out_degrees=entry["out"],
            )
        )
    return snapshots
