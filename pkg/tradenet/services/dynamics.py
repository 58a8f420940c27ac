"""
Trade settlement, insolvency cascades and the simulation loop
"""

import logging
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Optional, Sequence

import numpy as np

from tradenet.config import get_settings
from tradenet.exceptions import ConservationError, ContractViolationError
from tradenet.schemas import (
    AvalancheRecord,
    DynamicsConfig,
    SimulationOutput,
    StepReport,
    TopologySnapshot,
)
from tradenet.services.metrics import log_returns
from tradenet.services.network import (
    TradeNetwork,
    add_link_preferential,
    attach_preferential,
    create_network,
    degrees,
    remove_in_links,
)

logger = logging.getLogger(__name__)

# (k_in, k_out) of producers -> exchange rate alpha per producer
ExchangeRatePolicy = Callable[[np.ndarray, np.ndarray], np.ndarray]


def demand_supply_ratio(k_in: np.ndarray, k_out: np.ndarray) -> np.ndarray:
    """alpha = (k_in + 1) / (k_out + 1) of the producer"""
    return (k_in + 1.0) / (k_out + 1.0)


def exchange_rate(
    net: TradeNetwork,
    producer: int,
    consumer: int,
    policy: ExchangeRatePolicy = demand_supply_ratio,
) -> float:
    """
    Exchange rate of labor on the link producer -> consumer

    Raises:
        AgentLookupError: If either agent does not exist
    """
    net.require(consumer)
    k_in, k_out = degrees(net, producer)
    return float(policy(np.float64(k_in), np.float64(k_out)))


def settle_trades(
    net: TradeNetwork,
    policy: ExchangeRatePolicy = demand_supply_ratio,
    check_conservation: bool = False,
) -> np.ndarray:
    """
    Apply one round of trades to every agent's energy. For each link
    i -> j with weight W the producer nets (alpha_ij - 1) W and the
    consumer nets (1 - alpha_ij) W.

    Args:
        net: Network whose energies are updated in place
        policy: Exchange-rate policy
        check_conservation: Verify that the round is zero-sum

    Returns:
        Per-agent energy change

    Raises:
        ConservationError: If check_conservation is set and the total drifts
    """
    src, dst, weight = net.link_arrays()
    alpha = policy(net.in_degrees.astype(float), net.out_degrees.astype(float))
    gain = (alpha[src] - 1.0) * weight
    delta = np.bincount(src, weights=gain, minlength=net.n_agents) - np.bincount(
        dst, weights=gain, minlength=net.n_agents
    )
    net.energies[:] += delta

    if check_conservation:
        drift = abs(float(delta.sum()))
        if not drift <= 1e-9 * max(net.link_count, 1):
            raise ConservationError(
                f"Step {net.step}: settlement drifted by {drift:.3e} over {net.link_count} links"
            )
    return delta


def insolvency_margin(net: TradeNetwork, theta: float) -> np.ndarray:
    """U_i + theta * k_total(i) * W; negative means insolvent"""
    capacity = (net.in_degrees + net.out_degrees) * net.cfg.default_weight
    return net.energies + theta * capacity


def is_insolvent(net: TradeNetwork, agent_id: int, theta: float) -> bool:
    """
    True iff U_i < -theta * (k_in + k_out) * W. The boundary is solvent.

    Raises:
        AgentLookupError: If the agent does not exist
    """
    k_in, k_out = degrees(net, agent_id)
    return bool(net.energies[agent_id] < -theta * (k_in + k_out) * net.cfg.default_weight)


def trigger_cascade(
    net: TradeNetwork, seed_agent: int, theta: float, step: Optional[int] = None
) -> AvalancheRecord:
    """
    Collapse an insolvent agent and everything its collapse drags down,
    breadth first. A collapsing agent loses its in-links and its energy is
    discharged to zero; suppliers that turn insolvent are queued once, in
    ascending AgentId order.

    Raises:
        ContractViolationError: If seed_agent is solvent
    """
    if not is_insolvent(net, seed_agent, theta):
        raise ContractViolationError(f"Agent {seed_agent} is solvent")

    queue = deque([seed_agent])
    queued = {seed_agent}
    collapsed = 0
    destroyed = 0
    while queue:
        current = queue.popleft()
        collapsed += 1
        net.energies[current] = 0.0
        suppliers = sorted(net._in[current])
        destroyed += remove_in_links(net, current)
        for supplier in suppliers:
            if supplier not in queued and is_insolvent(net, supplier, theta):
                queued.add(supplier)
                queue.append(supplier)

    record = AvalancheRecord(
        step=net.step if step is None else step,
        r=collapsed,
        k_t=destroyed,
        seed_agent=seed_agent,
    )
    if collapsed >= get_settings().cascade_log_threshold:
        logger.info(f"Step {record.step}: avalanche r={collapsed} k_t={destroyed}")
    return record


def overall_product(net: TradeNetwork) -> float:
    """U_T: total weight of all outgoing product"""
    _, _, weight = net.link_arrays()
    return float(weight.sum())


def step(
    net: TradeNetwork,
    cfg: DynamicsConfig,
    policy: ExchangeRatePolicy = demand_supply_ratio,
    check_conservation: bool = False,
) -> StepReport:
    """
    Advance the network one time step: growth, settlement, cascades,
    then record U_T.

    Every insolvent agent is handled in ascending AgentId order. One that
    still has in-links starts a cascade; one without in-links has nothing to
    lose, so its deficit is discharged to zero and no avalanche is recorded.
    """
    net.step += 1
    links_before = net.link_count

    if net.rng.random() < cfg.new_agent_probability:
        attach_preferential(net, cfg.growth.m_new, cfg.growth.direction_mix)
    else:
        add_link_preferential(net)
    links_added = net.link_count - links_before

    settle_trades(net, policy, check_conservation)

    avalanches = []
    discharged = 0
    candidates = np.flatnonzero(insolvency_margin(net, cfg.theta) < 0.0)
    for candidate in candidates.tolist():
        if not is_insolvent(net, candidate, cfg.theta):
            continue
        if net.in_degrees[candidate] > 0:
            avalanches.append(trigger_cascade(net, candidate, cfg.theta))
        else:
            net.energies[candidate] = 0.0
            discharged += 1

    u_t = overall_product(net)
    links_removed = sum(record.k_t for record in avalanches)
    logger.debug(
        f"Step {net.step}: U_T={u_t:.1f} +{links_added} -{links_removed} "
        f"avalanches={len(avalanches)} discharged={discharged}"
    )
    return StepReport(
        step=net.step,
        avalanches=avalanches,
        u_t=u_t,
        links_added=links_added,
        links_removed=links_removed,
        discharged=discharged,
    )


def snapshot(net: TradeNetwork, u_t: float) -> TopologySnapshot:
    return TopologySnapshot(
        step=net.step,
        agents=net.n_agents,
        links=net.link_count,
        u_t=u_t,
        in_degrees=net.in_degrees.tolist(),
        out_degrees=net.out_degrees.tolist(),
    )


def run_simulation(
    cfg: DynamicsConfig,
    seed: int,
    policy: ExchangeRatePolicy = demand_supply_ratio,
) -> SimulationOutput:
    """
    Grow and settle a trade network for cfg.steps steps

    Args:
        cfg: Dynamics configuration
        seed: Master seed; the run is a pure function of (cfg, seed)
        policy: Exchange-rate policy

    Returns:
        SimulationOutput with U_T of length steps + 1
    """
    check = get_settings().debug
    net = create_network(cfg.growth, seed)
    u_t = np.empty(cfg.steps + 1)
    u_t[0] = overall_product(net)

    reports: list[StepReport] = []
    avalanches: list[AvalancheRecord] = []
    snapshots: list[TopologySnapshot] = []
    for t in range(1, cfg.steps + 1):
        report = step(net, cfg, policy, check)
        u_t[t] = report.u_t
        reports.append(report)
        avalanches.extend(report.avalanches)
        if cfg.snapshot_every and t % cfg.snapshot_every == 0:
            snapshots.append(snapshot(net, report.u_t))

    logger.info(
        f"Run seed={seed}: {cfg.steps} steps, {net.n_agents} agents, "
        f"{net.link_count} links, {len(avalanches)} avalanches"
    )
    return SimulationOutput(
        u_t=u_t,
        returns=log_returns(u_t),
        avalanches=avalanches,
        reports=reports,
        snapshots=snapshots,
        final_network=net,
        config_echo=cfg,
        seed=seed,
    )


def run_batch(
    cfg: DynamicsConfig, seeds: Sequence[int], jobs: int = 1
) -> list[SimulationOutput]:
    """Independent runs, one per seed, optionally in worker processes"""
    if jobs <= 1 or len(seeds) <= 1:
        return [run_simulation(cfg, seed) for seed in seeds]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_simulation, [cfg] * len(seeds), seeds))
