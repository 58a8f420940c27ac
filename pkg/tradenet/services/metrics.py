"""
Topology observables P(k), D(k), C(k), l(k) and return-series construction
"""

import logging
from typing import Iterable, Literal, Sequence, Tuple

import networkx as nx
import numpy as np
import pandas as pd
from scipy import stats

from tradenet.exceptions import EmptyInputError
from tradenet.schemas import (
    DegreeBin,
    DegreeHistogram,
    DegreeProfile,
    ProfileRow,
    TopologySnapshot,
    TrendFit,
)
from tradenet.services.network import TradeNetwork, undirected_projection
from tradenet.services.streams import substream

logger = logging.getLogger(__name__)

DegreeMode = Literal["in", "out", "total"]


def degree_sequence(net: TradeNetwork, mode: DegreeMode = "total") -> np.ndarray:
    if mode == "in":
        return net.in_degrees.copy()
    if mode == "out":
        return net.out_degrees.copy()
    return net.in_degrees + net.out_degrees


def histogram_from_degrees(
    values: Iterable[int], mode: DegreeMode = "total"
) -> DegreeHistogram:
    """
    Raises:
        EmptyInputError: If there are no agents
    """
    degrees = np.fromiter(values, dtype=np.int64)
    if degrees.size == 0:
        raise EmptyInputError("Degree distribution of an empty network")
    ks, counts = np.unique(degrees, return_counts=True)
    total = counts.sum()
    return DegreeHistogram(
        mode=mode,
        entries={
            int(k): DegreeBin(count=int(c), p=float(c / total))
            for k, c in zip(ks, counts)
        },
    )


def degree_distribution(net: TradeNetwork, mode: DegreeMode = "total") -> DegreeHistogram:
    """P(k) over all agents in the chosen degree mode"""
    return histogram_from_degrees(degree_sequence(net, mode), mode)


def averaged_degree_distribution(
    snapshots: Sequence[TopologySnapshot], mode: DegreeMode = "total"
) -> DegreeHistogram:
    """P(k) pooled over the degree sequences of several snapshots"""
    pooled = [k for snap in snapshots for k in snap.degrees(mode)]
    return histogram_from_degrees(pooled, mode)


def _profile(
    name: Literal["D", "C", "l"], ks: Sequence[int], values: Sequence[float]
) -> DegreeProfile:
    frame = pd.DataFrame({"k": ks, "value": values})
    table = frame.groupby("k", sort=True)["value"].agg(["mean", "size"])
    rows = [
        ProfileRow(k=int(k), value=float(row["mean"]), samples=int(row["size"]))
        for k, row in table.iterrows()
    ]
    return DegreeProfile(name=name, rows=rows)


def degree_correlation(net: TradeNetwork) -> DegreeProfile:
    """
    D(k): mean over agents of degree k of their mean neighbour degree,
    on the undirected projection

    Raises:
        EmptyInputError: If the network has no links
    """
    graph = undirected_projection(net)
    if graph.number_of_edges() == 0:
        raise EmptyInputError("Degree correlation needs at least one link")
    neighbour_degree = nx.average_neighbor_degree(graph)
    nodes = [node for node, k in graph.degree() if k > 0]
    return _profile(
        "D", [graph.degree(node) for node in nodes], [neighbour_degree[node] for node in nodes]
    )


def clustering_by_degree(net: TradeNetwork) -> DegreeProfile:
    """
    C(k) on the undirected projection. Degree-1 agents enter with C = 0
    and their k is flagged.
    """
    graph = undirected_projection(net)
    clustering = nx.clustering(graph)
    nodes = [node for node, k in graph.degree() if k > 0]
    if not nodes:
        raise EmptyInputError("Clustering needs at least one link")
    profile = _profile(
        "C", [graph.degree(node) for node in nodes], [clustering[node] for node in nodes]
    )
    profile.flagged = [row.k for row in profile.rows if row.k == 1]
    return profile


def giant_component(graph: nx.Graph) -> nx.Graph:
    if graph.number_of_nodes() == 0:
        raise EmptyInputError("Graph has no nodes")
    largest = max(nx.connected_components(graph), key=len)
    return graph.subgraph(largest).copy()


def _stratified_sources(
    graph: nx.Graph, count: int, rng: np.random.Generator
) -> list[int]:
    """Sample sources so every occupied degree keeps at least one"""
    by_degree: dict[int, list[int]] = {}
    for node in sorted(graph.nodes()):
        by_degree.setdefault(graph.degree(node), []).append(node)
    n = graph.number_of_nodes()
    sources: list[int] = []
    for k in sorted(by_degree):
        members = by_degree[k]
        quota = max(1, round(count * len(members) / n))
        picked = rng.choice(len(members), size=min(quota, len(members)), replace=False)
        sources.extend(members[i] for i in sorted(picked.tolist()))
    return sources


def path_length_by_degree(
    net: TradeNetwork, sample_pairs: int = 1000, seed: int = 0
) -> DegreeProfile:
    """
    l(k): mean BFS distance from agents of degree k to the rest of the
    giant component. Sources are stratified by degree; every node is a
    source when sample_pairs covers the component.

    Raises:
        EmptyInputError: If the giant component has fewer than 2 agents
    """
    graph = giant_component(undirected_projection(net))
    n = graph.number_of_nodes()
    if n < 2:
        raise EmptyInputError("Path lengths need a giant component of >= 2 agents")

    if sample_pairs >= n:
        sources = sorted(graph.nodes())
    else:
        sources = _stratified_sources(graph, sample_pairs, substream(seed, "sampling"))

    ks, lengths = [], []
    for source in sources:
        distances = nx.single_source_shortest_path_length(graph, source)
        ks.append(graph.degree(source))
        lengths.append(sum(distances.values()) / (n - 1))
    logger.debug(f"Path lengths from {len(sources)} of {n} agents")
    return _profile("l", ks, lengths)


def path_length_trend(profile: DegreeProfile) -> TrendFit:
    """Least-squares slope of l(k) against ln k"""
    ks = np.array([row.k for row in profile.rows], dtype=float)
    values = np.array([row.value for row in profile.rows])
    if ks.size < 3:
        raise EmptyInputError("Trend needs at least 3 occupied degrees")
    fit = stats.linregress(np.log(ks), values)
    return TrendFit(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        stderr=float(fit.stderr),
        p_value=float(fit.pvalue),
        r2=float(fit.rvalue**2),
        n=int(ks.size),
    )


def profile_flatness(profile: DegreeProfile, min_samples: int = 20) -> Tuple[float, float]:
    """
    (max - min) / mean and coefficient of variation of a profile over the
    degrees with at least min_samples agents
    """
    values = np.array([row.value for row in profile.rows if row.samples >= min_samples])
    if values.size == 0:
        raise EmptyInputError(f"No degree has {min_samples} samples")
    mean = values.mean()
    if mean == 0.0:
        return 0.0, 0.0
    return float(np.ptp(values) / mean), float(values.std() / mean)


def log_returns(series: Sequence[float]) -> np.ndarray:
    """
    x_t = ln(v_{t+1} / v_t); positions touching a nonpositive value are NaN
    """
    values = np.asarray(series, dtype=float)
    if values.size < 2:
        return np.empty(0)
    before, after = values[:-1], values[1:]
    valid = (before > 0.0) & (after > 0.0)
    returns = np.full(values.size - 1, np.nan)
    returns[valid] = np.log(after[valid] / before[valid])
    return returns
