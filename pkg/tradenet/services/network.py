"""
Directed trade network and preferential-attachment growth
"""

import logging
from typing import Optional, Tuple

import networkx as nx
import numpy as np

from tradenet.exceptions import AgentLookupError, ContractViolationError
from tradenet.schemas import Agent, GrowthConfig
from tradenet.services.streams import substream

logger = logging.getLogger(__name__)

# Producer redraws before a between-agents growth link is skipped
MAX_LINK_DRAWS = 32


class TradeNetwork:
    """
    Directed graph of agents. A link i -> j means i produces for j
    (out-link of i, in-link of j) and carries a labor weight W.

    Link endpoints live in slot arrays so settlement can run vectorized;
    per-agent dicts map neighbours to slots for O(1) lookups.
    """

    def __init__(self, cfg: GrowthConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.n_agents = 0
        self.link_count = 0
        self.step = 0

        self._energy = np.zeros(16)
        self._k_in = np.zeros(16, dtype=np.int64)
        self._k_out = np.zeros(16, dtype=np.int64)
        self._in: list[dict[int, int]] = []
        self._out: list[dict[int, int]] = []

        self._src = np.zeros(16, dtype=np.int64)
        self._dst = np.zeros(16, dtype=np.int64)
        self._weight = np.zeros(16)
        self._live = np.zeros(16, dtype=bool)
        self._n_slots = 0
        self._free: list[int] = []

    # ---------- agents ----------

    def add_agent(self) -> int:
        """Append an isolated agent with zero energy"""
        if self.n_agents == len(self._energy):
            size = 2 * len(self._energy)
            self._energy = np.resize(self._energy, size)
            self._k_in = np.resize(self._k_in, size)
            self._k_out = np.resize(self._k_out, size)
            self._energy[self.n_agents :] = 0.0
            self._k_in[self.n_agents :] = 0
            self._k_out[self.n_agents :] = 0
        agent_id = self.n_agents
        self.n_agents += 1
        self._in.append({})
        self._out.append({})
        return agent_id

    def require(self, agent_id: int) -> None:
        """
        Raises:
            AgentLookupError: If agent_id is not in the network
        """
        if not 0 <= agent_id < self.n_agents:
            raise AgentLookupError(f"Unknown agent {agent_id}")

    @property
    def energies(self) -> np.ndarray:
        """Writable view of U_i for all agents"""
        return self._energy[: self.n_agents]

    @property
    def in_degrees(self) -> np.ndarray:
        return self._k_in[: self.n_agents]

    @property
    def out_degrees(self) -> np.ndarray:
        return self._k_out[: self.n_agents]

    def in_links(self, agent_id: int) -> dict[int, float]:
        """Suppliers of agent_id mapped to link weight"""
        self.require(agent_id)
        return {src: float(self._weight[s]) for src, s in self._in[agent_id].items()}

    def out_links(self, agent_id: int) -> dict[int, float]:
        """Consumers of agent_id mapped to link weight"""
        self.require(agent_id)
        return {dst: float(self._weight[s]) for dst, s in self._out[agent_id].items()}

    def has_link(self, src: int, dst: int) -> bool:
        return dst in self._out[src]

    # ---------- links ----------

    def add_link(self, src: int, dst: int, weight: Optional[float] = None) -> bool:
        """
        Create the link src -> dst

        Returns:
            False when the link would be a self-loop or a duplicate
        """
        self.require(src)
        self.require(dst)
        if src == dst or dst in self._out[src]:
            return False

        if self._free:
            slot = self._free.pop()
        else:
            if self._n_slots == len(self._src):
                size = 2 * len(self._src)
                self._src = np.resize(self._src, size)
                self._dst = np.resize(self._dst, size)
                self._weight = np.resize(self._weight, size)
                self._live = np.resize(self._live, size)
                self._live[self._n_slots :] = False
            slot = self._n_slots
            self._n_slots += 1

        self._src[slot] = src
        self._dst[slot] = dst
        self._weight[slot] = self.cfg.default_weight if weight is None else weight
        self._live[slot] = True
        self._out[src][dst] = slot
        self._in[dst][src] = slot
        self._k_out[src] += 1
        self._k_in[dst] += 1
        self.link_count += 1
        return True

    def remove_link(self, src: int, dst: int) -> float:
        """Delete src -> dst and return its weight"""
        slot = self._out[src].pop(dst)
        del self._in[dst][src]
        self._live[slot] = False
        self._free.append(slot)
        self._k_out[src] -= 1
        self._k_in[dst] -= 1
        self.link_count -= 1
        return float(self._weight[slot])

    def link_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Sources, targets and weights of all live links"""
        live = self._live[: self._n_slots]
        return (
            self._src[: self._n_slots][live],
            self._dst[: self._n_slots][live],
            self._weight[: self._n_slots][live],
        )


def create_network(cfg: GrowthConfig, seed: int) -> TradeNetwork:
    """
    Seed network: n0 agents on a directed ring, agent i producing for
    agent (i + 1) mod n0. A single agent gets no self-loop.
    """
    net = TradeNetwork(cfg, substream(seed, "growth"))
    for _ in range(cfg.n0):
        net.add_agent()
    if cfg.n0 > 1:
        for i in range(cfg.n0):
            net.add_link(i, (i + 1) % cfg.n0)
    logger.debug(f"Created ring of {cfg.n0} agents with {net.link_count} links")
    return net


def attachment_weights(net: TradeNetwork) -> np.ndarray:
    """Linear kernel k_in + k_out + pa_offset for every agent"""
    return (net.in_degrees + net.out_degrees).astype(float) + net.cfg.pa_offset


def preferential_targets(
    net: TradeNetwork, count: int, exclude: Optional[np.ndarray] = None
) -> list[int]:
    """
    Draw `count` distinct agents with probability proportional to the
    attachment kernel. Falls back to uniform choice when every admissible
    weight is zero.

    Args:
        net: Network to draw from
        count: Number of distinct agents to draw
        exclude: Boolean mask of agents that may not be drawn
    """
    weights = attachment_weights(net)
    admissible = np.ones(net.n_agents, dtype=bool)
    if exclude is not None:
        admissible &= ~exclude
    weights[~admissible] = 0.0

    chosen: list[int] = []
    for _ in range(min(count, int(admissible.sum()))):
        cumulative = np.cumsum(weights)
        if cumulative[-1] > 0.0:
            # normalized so the last admissible agent ends exactly at 1.0
            cumulative /= cumulative[-1]
            pick = int(np.searchsorted(cumulative, net.rng.random(), side="right"))
        else:
            pool = np.flatnonzero(admissible)
            pick = int(pool[net.rng.integers(len(pool))])
        chosen.append(pick)
        weights[pick] = 0.0
        admissible[pick] = False
    return chosen


def attach_preferential(net: TradeNetwork, m_new: int, direction_mix: float) -> int:
    """
    Add one agent linked to m_new existing agents chosen by preferential
    attachment

    Args:
        net: Network to grow
        m_new: Links per newcomer, clamped to the number of existing agents
        direction_mix: Probability that a link runs newcomer -> target

    Returns:
        AgentId of the newcomer

    Raises:
        ContractViolationError: If a drawn target yields a duplicate link
    """
    existing = net.n_agents
    if m_new > existing:
        logger.info(f"Step {net.step}: m_new clamped from {m_new} to {existing}")
        m_new = existing

    targets = preferential_targets(net, m_new)
    newcomer = net.add_agent()
    for target in targets:
        if net.rng.random() < direction_mix:
            src, dst = newcomer, target
        else:
            src, dst = target, newcomer
        if not net.add_link(src, dst):
            raise ContractViolationError(f"Newcomer link {src} -> {dst} already exists")
    return newcomer


def add_link_preferential(net: TradeNetwork) -> Optional[Tuple[int, int]]:
    """
    Add one producer -> consumer link between existing agents, both ends
    drawn by the attachment kernel

    Returns:
        (producer, consumer), or None when no admissible pair was found

    Raises:
        ContractViolationError: If the drawn pair is already linked
    """
    if net.n_agents < 2:
        return None

    for _ in range(MAX_LINK_DRAWS):
        producer = preferential_targets(net, 1)[0]
        taken = np.zeros(net.n_agents, dtype=bool)
        taken[producer] = True
        taken[np.fromiter(net._out[producer], dtype=np.int64)] = True
        if taken.all():
            continue
        consumer = preferential_targets(net, 1, exclude=taken)[0]
        if not net.add_link(producer, consumer):
            raise ContractViolationError(f"Growth link {producer} -> {consumer} already exists")
        return producer, consumer

    logger.warning(f"Step {net.step}: skipped growth link, no admissible pair")
    return None


def remove_in_links(net: TradeNetwork, agent_id: int) -> int:
    """
    Delete every in-link of an agent together with the mirrored out-link
    at each supplier

    Returns:
        Number of links removed
    """
    net.require(agent_id)
    suppliers = sorted(net._in[agent_id])
    for supplier in suppliers:
        net.remove_link(supplier, agent_id)
    return len(suppliers)


def degrees(net: TradeNetwork, agent_id: int) -> Tuple[int, int]:
    """Current (k_in, k_out) of an agent"""
    net.require(agent_id)
    return int(net.in_degrees[agent_id]), int(net.out_degrees[agent_id])


def agent(net: TradeNetwork, agent_id: int) -> Agent:
    """Snapshot of one agent"""
    net.require(agent_id)
    return Agent(
        id=agent_id,
        energy=float(net.energies[agent_id]),
        in_links=net.in_links(agent_id),
        out_links=net.out_links(agent_id),
    )


def undirected_projection(net: TradeNetwork) -> nx.Graph:
    """Undirected graph over all agents; reciprocal links merge into one edge"""
    graph = nx.Graph()
    graph.add_nodes_from(range(net.n_agents))
    src, dst, _ = net.link_arrays()
    graph.add_edges_from(zip(src.tolist(), dst.tolist()))
    return graph


def check_consistency(net: TradeNetwork) -> None:
    """
    Full scan of the mirror and counting invariants

    Raises:
        ContractViolationError: On the first violation found
    """
    out_total = 0
    in_total = 0
    for i in range(net.n_agents):
        out_links = net._out[i]
        in_links = net._in[i]
        if i in out_links or i in in_links:
            raise ContractViolationError(f"Agent {i} has a self-loop")
        if len(out_links) != net.out_degrees[i] or len(in_links) != net.in_degrees[i]:
            raise ContractViolationError(f"Agent {i} degree counters out of sync")
        for dst, slot in out_links.items():
            if net._in[dst].get(i) != slot:
                raise ContractViolationError(f"Link {i}->{dst} has no mirrored in-link")
            if not net._live[slot] or net._weight[slot] <= 0.0:
                raise ContractViolationError(f"Link {i}->{dst} has an invalid slot")
        out_total += len(out_links)
        in_total += len(in_links)

    if not out_total == in_total == net.link_count == len(net.link_arrays()[0]):
        raise ContractViolationError(
            f"Link totals disagree: out={out_total} in={in_total} count={net.link_count}"
        )
