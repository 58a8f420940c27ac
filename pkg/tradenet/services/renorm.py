"""
Box-counting renormalization of the undirected trade graph
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence, Tuple, cast

import networkx as nx
import numpy as np
from scipy import stats

from tradenet.exceptions import ConfigurationError, DomainError
from tradenet.schemas import BoxCovering, FractalFit
from tradenet.services.metrics import giant_component
from tradenet.services.streams import substream_seeds

logger = logging.getLogger(__name__)

MIN_SCALES = 3

# Graph shared with worker processes, set once per worker
_worker_graph: Optional[nx.Graph] = None


def _burn_once(graph: nx.Graph, l_b: int, rng: np.random.Generator) -> dict[int, int]:
    nodes = sorted(graph.nodes())
    order = [nodes[i] for i in rng.permutation(len(nodes))]
    radius = l_b - 1
    assignment: dict[int, int] = {}
    box = -1

    for founder in order:
        if founder in assignment:
            continue
        box += 1
        assignment[founder] = box
        if radius == 0:
            continue

        ball = nx.single_source_shortest_path_length(graph, founder, cutoff=radius)
        candidates = sorted(node for node in ball if node not in assignment)
        members = {founder: ball}
        for pick in rng.permutation(len(candidates)):
            node = candidates[pick]
            if all(node in reach for reach in members.values()):
                assignment[node] = box
                members[node] = nx.single_source_shortest_path_length(
                    graph, node, cutoff=radius
                )
    return assignment


def box_cover(graph: nx.Graph, l_b: int, seed: int, restarts: int = 1) -> BoxCovering:
    """
    Greedy box covering of the giant component. Nodes are visited in a
    random order; each uncovered node founds a box that absorbs, in random
    order, uncovered nodes closer than l_b to every current member.

    Args:
        graph: Undirected graph
        l_b: Box scale; members of a box are at distance < l_b
        seed: Seed of the visiting order
        restarts: Independent greedy passes; the smallest cover is kept

    Returns:
        BoxCovering over the giant component

    Raises:
        ConfigurationError: If l_b < 1
        EmptyInputError: If the graph has no nodes
    """
    if l_b < 1:
        raise ConfigurationError(f"Box scale l_b must be >= 1, got {l_b}")
    giant = giant_component(graph)
    rng = np.random.default_rng(seed)

    best = _burn_once(giant, l_b, rng)
    for _ in range(restarts - 1):
        assignment = _burn_once(giant, l_b, rng)
        if max(assignment.values()) < max(best.values()):
            best = assignment
    return BoxCovering(l_b=l_b, assignment=best, n_boxes=max(best.values()) + 1)


def box_graph(graph: nx.Graph, covering: BoxCovering) -> nx.Graph:
    """Boxes as nodes, linked when any pair of their members is linked"""
    boxes = nx.Graph()
    boxes.add_nodes_from(range(covering.n_boxes))
    for u, v in graph.edges():
        bu = covering.assignment.get(u)
        bv = covering.assignment.get(v)
        if bu is not None and bv is not None and bu != bv:
            boxes.add_edge(bu, bv)
    return boxes


def renormalized_degrees(graph: nx.Graph, covering: BoxCovering) -> list[int]:
    """Degree of every box in the box graph, indexed by box id"""
    boxes = box_graph(graph, covering)
    return [boxes.degree(box) for box in range(covering.n_boxes)]


def _cover_stats(graph: nx.Graph, l_b: int, seed: int, restarts: int) -> Tuple[int, int]:
    covering = box_cover(graph, l_b, seed, restarts)
    return covering.n_boxes, max(renormalized_degrees(graph, covering))


def _init_worker(graph: nx.Graph) -> None:
    global _worker_graph
    _worker_graph = graph


def _cover_task(task: Tuple[int, int, int]) -> Tuple[int, int]:
    l_b, seed, restarts = task
    return _cover_stats(cast(nx.Graph, _worker_graph), l_b, seed, restarts)


def _regress(log_scale: np.ndarray, log_value: np.ndarray) -> Tuple[float, float]:
    fit = stats.linregress(log_scale, log_value)
    return float(-fit.slope), float(fit.rvalue**2)


def fractal_dimensions(
    graph: nx.Graph,
    scales: Sequence[int],
    seed: int,
    cover_seeds: int = 8,
    restarts: int = 1,
    jobs: int = 1,
) -> FractalFit:
    """
    Box-counting dimension d_B from N_p ~ l_b^-d_B and degree dimension
    d_k from k_p / k_max ~ l_b^-d_k, averaging each scale over several
    cover seeds drawn from the covering substream

    Args:
        graph: Undirected graph, covered on its giant component
        scales: Box scales, at least three
        seed: Master seed
        cover_seeds: Covers per scale
        restarts: Greedy passes per cover
        jobs: Worker processes

    Raises:
        ConfigurationError: If fewer than 3 distinct scales are given
    """
    scales = sorted(set(int(s) for s in scales))
    if len(scales) < MIN_SCALES:
        raise ConfigurationError(f"renorm.scales: at least {MIN_SCALES} scales are required")
    if scales[0] < 1:
        raise ConfigurationError("renorm.scales: box scales must be >= 1")

    giant = giant_component(graph)
    k_max = max(dict(giant.degree()).values())
    seeds = substream_seeds(seed, "covering", cover_seeds)
    tasks = [(l_b, s, restarts) for l_b in scales for s in seeds]

    if jobs > 1:
        with ProcessPoolExecutor(
            max_workers=jobs, initializer=_init_worker, initargs=(giant,)
        ) as pool:
            results = list(pool.map(_cover_task, tasks))
    else:
        results = [_cover_stats(giant, l_b, s, r) for l_b, s, r in tasks]

    per_scale = np.array(results, dtype=float).reshape(len(scales), len(seeds), 2)
    n_p = per_scale[:, :, 0].mean(axis=1)
    n_p_std = per_scale[:, :, 0].std(axis=1)
    k_p = per_scale[:, :, 1].mean(axis=1)
    log_scale = np.log(np.asarray(scales, dtype=float))

    fit = FractalFit(
        scales=scales,
        n_p=n_p.tolist(),
        n_p_std=n_p_std.tolist(),
        k_p=k_p.tolist(),
        k_max=int(k_max),
    )
    notes = []

    if np.all(n_p == n_p[0]):
        fit.degenerate = True
        notes.append(f"box count is {n_p[0]:g} at every scale; dimensions undefined")
        logger.warning(f"Degenerate box-counting regression over scales {scales}")
    else:
        fit.d_b, fit.r2_b = _regress(log_scale, np.log(n_p))

    usable = k_p > 0.0
    if k_max == 0 or usable.sum() < MIN_SCALES:
        notes.append(f"only {int(usable.sum())} scales with inter-box links; d_k undefined")
    else:
        values = np.log(k_p[usable] / k_max)
        if np.all(values == values[0]):
            notes.append("hub box degree constant across scales; d_k undefined")
        else:
            fit.d_k, fit.r2_k = _regress(log_scale[usable], values)

    fit.note = "; ".join(notes) or None
    logger.info(
        f"Fractal fit over {len(scales)} scales x {len(seeds)} covers: "
        f"d_B={fit.d_b} d_k={fit.d_k}"
    )
    return fit


def gamma_prediction(d_b: float, d_k: float) -> float:
    """
    gamma = 1 + 2 d_B / d_k

    Raises:
        DomainError: If d_k <= 0
    """
    if d_k <= 0.0:
        raise DomainError(f"d_k must be positive, got {d_k}")
    return 1.0 + 2.0 * d_b / d_k
