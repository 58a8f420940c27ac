"""
Tests for settlement, insolvency cascades and the simulation loop
"""

import numpy as np
import pytest
from pydantic import ValidationError

from tradenet.conftest import NetworkFactory
from tradenet.exceptions import AgentLookupError, ConservationError, ContractViolationError
from tradenet.schemas import DynamicsConfig, GrowthConfig
from tradenet.services.dynamics import (
    demand_supply_ratio,
    exchange_rate,
    is_insolvent,
    overall_product,
    run_batch,
    run_simulation,
    settle_trades,
    step,
    trigger_cascade,
)
from tradenet.services.network import TradeNetwork, check_consistency, create_network, remove_in_links


def recursive_collapse(
    in_links: dict[int, set[int]],
    out_degree: dict[int, int],
    energy: dict[int, float],
    theta: float,
    seed_agent: int,
) -> tuple[int, int]:
    """Independent depth-first reference for the cascade outcome on unit weights"""
    collapsed: set[int] = set()
    destroyed = 0

    def insolvent(i: int) -> bool:
        return energy[i] < -theta * (len(in_links[i]) + out_degree[i])

    def collapse(i: int) -> None:
        nonlocal destroyed
        collapsed.add(i)
        energy[i] = 0.0
        suppliers = sorted(in_links[i])
        destroyed += len(suppliers)
        in_links[i] = set()
        for s in suppliers:
            out_degree[s] -= 1
        for s in suppliers:
            if s not in collapsed and insolvent(s):
                collapse(s)

    collapse(seed_agent)
    return len(collapsed), destroyed


class TestExchangeRate:
    """Test the demand/supply exchange rate"""

    def test_symmetric_producer(self, network_from_edges: NetworkFactory) -> None:
        """Test (k_in, k_out) = (1, 1) gives alpha = 1"""
        net = network_from_edges(3, [(0, 1), (1, 2), (2, 0)])
        assert exchange_rate(net, 0, 1) == 1.0

    def test_demanded_producer(self, network_from_edges: NetworkFactory) -> None:
        """Test (k_in, k_out) = (3, 0) gives alpha = 4"""
        net = network_from_edges(4, [(1, 0), (2, 0), (3, 0)])
        assert exchange_rate(net, 0, 1) == 4.0

    def test_monotone_in_demand(self) -> None:
        """Test alpha strictly increases with k_in for every k_out"""
        k = np.arange(21, dtype=float)
        grid = demand_supply_ratio(k[:, None], k[None, :])
        assert np.all(np.diff(grid, axis=0) > 0.0)
        assert np.all(np.isfinite(grid)) and np.all(grid > 0.0)

    def test_unknown_agent(self, network_from_edges: NetworkFactory) -> None:
        """Test lookup error for a missing producer or consumer"""
        net = network_from_edges(2, [(0, 1)])
        with pytest.raises(AgentLookupError):
            exchange_rate(net, 5, 1)
        with pytest.raises(AgentLookupError):
            exchange_rate(net, 0, 5)


class TestSettlement:
    """Test trade settlement"""

    def test_reciprocal_pair_is_neutral(self, network_from_edges: NetworkFactory) -> None:
        """Test symmetric reciprocal links leave energies unchanged"""
        net = network_from_edges(2, [(0, 1), (1, 0)])
        delta = settle_trades(net)
        assert np.all(delta == 0.0)
        assert np.all(net.energies == 0.0)

    def test_line_oracle(self, network_from_edges: NetworkFactory) -> None:
        """Test a -> b -> c against hand-computed energies"""
        # alpha_a = (0+1)/(1+1) = 0.5, alpha_b = (1+1)/(1+1) = 1
        net = network_from_edges(3, [(0, 1), (1, 2)])
        settle_trades(net)
        assert net.energies.tolist() == pytest.approx([-0.5, 0.5, 0.0])
        settle_trades(net)
        assert net.energies.tolist() == pytest.approx([-1.0, 1.0, 0.0])

    def test_zero_sum(self) -> None:
        """Test total energy is conserved on a grown network"""
        cfg = DynamicsConfig(steps=0, theta=1e9, new_agent_probability=0.3)
        net = create_network(cfg.growth, seed=8)
        for _ in range(200):
            step(net, cfg)
        before = net.energies.sum()
        settle_trades(net, check_conservation=True)
        assert abs(net.energies.sum() - before) <= 1e-9 * net.link_count

    def test_drift_detected(self, network_from_edges: NetworkFactory) -> None:
        """Test the conservation sweep rejects a non-zero-sum round"""
        net = network_from_edges(3, [(0, 1), (1, 2)])
        settle_trades(net, check_conservation=True)
        net._weight[: net._n_slots] = np.nan
        with pytest.raises(ConservationError):
            settle_trades(net, check_conservation=True)

    def test_custom_policy(self, network_from_edges: NetworkFactory) -> None:
        """Test a pluggable exchange-rate policy is applied"""
        net = network_from_edges(2, [(0, 1)])
        settle_trades(net, lambda k_in, k_out: np.full(k_in.shape, 3.0))
        assert net.energies.tolist() == [2.0, -2.0]


class TestInsolvency:
    """Test the solvency threshold"""

    def test_zero_energy_solvent(self, network_from_edges: NetworkFactory) -> None:
        """Test U = 0 is solvent for any degree"""
        net = network_from_edges(3, [(0, 1), (1, 2)])
        assert not any(is_insolvent(net, i, 0.5) for i in range(3))

    def test_strict_boundary(self, network_from_edges: NetworkFactory) -> None:
        """Test theta=0.5, k_total=4: U=-2 solvent, below it insolvent"""
        net = network_from_edges(5, [(0, 1), (0, 2), (3, 0), (4, 0)], energies=[-2.0, 0, 0, 0, 0])
        assert not is_insolvent(net, 0, 0.5)
        net.energies[0] = -2.0000001
        assert is_insolvent(net, 0, 0.5)

    def test_isolated_agent(self, network_from_edges: NetworkFactory) -> None:
        """Test any negative energy is insolvent with no links"""
        net = network_from_edges(1, [], energies=[-1e-12])
        assert is_insolvent(net, 0, 100.0)

    def test_threshold_monotone(self, network_from_edges: NetworkFactory) -> None:
        """Test the insolvent set shrinks as theta grows"""
        rng = np.random.default_rng(0)
        edges = [(i, (i + 1) % 8) for i in range(8)] + [(0, 4), (2, 6), (5, 1)]
        net = network_from_edges(8, edges, energies=rng.normal(0.0, 3.0, 8))
        low = {i for i in range(8) if is_insolvent(net, i, 0.2)}
        high = {i for i in range(8) if is_insolvent(net, i, 1.5)}
        assert high <= low

    def test_unknown_agent(self, network_from_edges: NetworkFactory) -> None:
        """Test lookup error"""
        net = network_from_edges(1, [])
        with pytest.raises(AgentLookupError):
            is_insolvent(net, 1, 1.0)


class TestCascade:
    """Test avalanche propagation"""

    def test_isolated_seed(self, network_from_edges: NetworkFactory) -> None:
        """Test an isolated insolvent agent collapses alone"""
        net = network_from_edges(2, [], energies=[-1.0, 0.0])
        record = trigger_cascade(net, 0, theta=1.0, step=7)
        assert (record.r, record.k_t, record.seed_agent, record.step) == (1, 0, 0, 7)
        assert net.energies[0] == 0.0

    def test_hub_with_solvent_suppliers(self, network_from_edges: NetworkFactory) -> None:
        """Test a hub with six robust suppliers destroys six links alone"""
        energies = [-100.0] + [10.0] * 6
        net = network_from_edges(7, [(s, 0) for s in range(1, 7)], energies=energies)
        record = trigger_cascade(net, 0, theta=1.0)
        assert (record.r, record.k_t) == (1, 6)
        assert net.link_count == 0

    def test_solvent_seed_rejected(self, network_from_edges: NetworkFactory) -> None:
        """Test a solvent seed is a contract violation"""
        net = network_from_edges(2, [(0, 1)])
        with pytest.raises(ContractViolationError):
            trigger_cascade(net, 1, theta=1.0)

    def test_chain_at_threshold(self, network_from_edges: NetworkFactory) -> None:
        """Test a 5-agent chain where each supplier tips once it loses a link"""
        # 4 -> 3 -> 2 -> 1 -> 0; each supplier sits exactly on its threshold
        theta = 0.5
        edges = [(4, 3), (3, 2), (2, 1), (1, 0)]
        energies = [-1.0, -1.0, -1.0, -1.0, -0.5]
        net = network_from_edges(5, edges, energies=energies)

        in_links = {i: set() for i in range(5)}
        out_degree = {i: 0 for i in range(5)}
        for src, dst in edges:
            in_links[dst].add(src)
            out_degree[src] += 1
        expected = recursive_collapse(in_links, out_degree, dict(enumerate(energies)), theta, 0)

        record = trigger_cascade(net, 0, theta)
        assert (record.r, record.k_t) == expected == (5, 4)
        assert net.link_count == 0
        check_consistency(net)

    def test_branching_oracle(self, network_from_edges: NetworkFactory) -> None:
        """Test a random branching instance against the recursive reference"""
        rng = np.random.default_rng(21)
        for trial in range(20):
            n = 12
            edges = sorted(
                {(int(a), int(b)) for a, b in rng.integers(0, n, size=(30, 2)) if a != b}
            )
            energies = rng.uniform(-4.0, 0.5, n)
            net = network_from_edges(n, edges, energies=energies)
            seeds = [i for i in range(n) if is_insolvent(net, i, 0.7)]
            if not seeds:
                continue
            in_links = {i: set() for i in range(n)}
            out_degree = {i: 0 for i in range(n)}
            for src, dst in edges:
                in_links[dst].add(src)
                out_degree[src] += 1
            links_before = net.link_count
            expected_r, expected_k = recursive_collapse(
                in_links, out_degree, dict(enumerate(energies)), 0.7, seeds[0]
            )
            record = trigger_cascade(net, seeds[0], 0.7)
            assert record.r == expected_r, f"trial {trial}"
            assert record.k_t == expected_k == links_before - net.link_count
            check_consistency(net)


class TestOverallProduct:
    """Test U_T bookkeeping"""

    def test_ring(self) -> None:
        """Test a unit ring of three has U_T = 3"""
        assert overall_product(create_network(GrowthConfig(n0=3), seed=0)) == 3.0

    def test_empty(self) -> None:
        """Test an empty network has U_T = 0"""
        net = TradeNetwork(GrowthConfig(), np.random.default_rng(0))
        assert overall_product(net) == 0.0

    def test_removal_decreases_product(self, network_from_edges: NetworkFactory) -> None:
        """Test deleting four in-links lowers U_T by four"""
        net = network_from_edges(6, [(s, 0) for s in range(1, 5)] + [(0, 5)])
        before = overall_product(net)
        remove_in_links(net, 0)
        assert before - overall_product(net) == 4.0


class TestStep:
    """Test one simulation step"""

    def test_growth_only(self) -> None:
        """Test a newcomer-only step without insolvency adds m_new links"""
        cfg = DynamicsConfig(theta=1e9, new_agent_probability=1.0, growth=GrowthConfig(m_new=2))
        net = create_network(cfg.growth, seed=4)
        before = overall_product(net)
        report = step(net, cfg)
        assert report.avalanches == []
        assert report.u_t - before == 2.0
        assert report.links_added == 2
        assert report.step == 1

    def test_cascades_follow_settlement(self) -> None:
        """Test reported link removals match the avalanche records"""
        cfg = DynamicsConfig(theta=0.3, new_agent_probability=0.2)
        net = create_network(cfg.growth, seed=12)
        for _ in range(500):
            links_before = net.link_count
            report = step(net, cfg)
            assert report.links_removed == sum(a.k_t for a in report.avalanches)
            assert net.link_count == links_before + report.links_added - report.links_removed
            seeds = [a.seed_agent for a in report.avalanches]
            assert seeds == sorted(seeds)
        check_consistency(net)

    def test_producer_without_in_links_is_discharged(
        self, network_from_edges: NetworkFactory
    ) -> None:
        """Test an insolvent agent with no in-links is reset instead of staying in debt"""
        net = network_from_edges(
            5, [(0, 1), (0, 2), (0, 3), (0, 4)], energies=[-100.0, 0.0, 0.0, 0.0, 0.0]
        )
        cfg = DynamicsConfig(
            theta=0.5, new_agent_probability=1.0, growth=GrowthConfig(direction_mix=0.0)
        )
        report = step(net, cfg)
        assert net.in_degrees[0] == 0
        assert report.discharged == 1
        assert report.avalanches == []
        assert net.energies[0] == 0.0

    @pytest.mark.parametrize("theta", [0.3, 2.0])
    def test_no_agent_stays_insolvent(self, theta: float) -> None:
        """Test every step ends with all agents above their threshold"""
        cfg = DynamicsConfig(theta=theta, new_agent_probability=0.2)
        net = create_network(cfg.growth, seed=21)
        discharged = 0
        for _ in range(1000):
            report = step(net, cfg)
            discharged += report.discharged
            insolvent = [i for i in range(net.n_agents) if is_insolvent(net, i, theta)]
            assert insolvent == [], f"step {report.step}"
        floor = -theta * (net.in_degrees + net.out_degrees) * net.cfg.default_weight
        assert np.all(net.energies >= floor)
        assert discharged > 0


class TestRunSimulation:
    """Test whole runs"""

    def test_zero_steps(self) -> None:
        """Test steps=0 keeps only the initial product"""
        output = run_simulation(DynamicsConfig(steps=0), seed=1)
        assert output.u_t.tolist() == [3.0]
        assert output.returns.size == 0
        assert output.avalanches == []

    def test_negative_theta_rejected(self) -> None:
        """Test theta must be positive"""
        with pytest.raises(ValidationError):
            DynamicsConfig(theta=-1.0)

    def test_lengths_and_returns(self) -> None:
        """Test series lengths and the log-return definition"""
        output = run_simulation(DynamicsConfig(steps=300, theta=0.5), seed=3)
        assert output.u_t.size == 301
        assert output.returns.size == 300
        valid = (output.u_t[:-1] > 0) & (output.u_t[1:] > 0)
        expected = np.log(output.u_t[1:][valid] / output.u_t[:-1][valid])
        assert np.allclose(output.returns[valid], expected, rtol=0, atol=1e-12)
        assert np.all(np.isnan(output.returns[~valid]))

    def test_negative_returns_need_avalanches(self) -> None:
        """Test every drop in U_T coincides with an avalanche destroying more than it added"""
        output = run_simulation(DynamicsConfig(steps=2000, theta=0.5), seed=5)
        for t, report in enumerate(output.reports):
            if output.returns[t] < 0:
                assert report.avalanches
                assert report.links_removed > report.links_added

    def test_determinism(self) -> None:
        """Test a run is a pure function of config and seed"""
        cfg = DynamicsConfig(steps=400, theta=0.5)
        first = run_simulation(cfg, seed=9)
        second = run_simulation(cfg, seed=9)
        assert np.array_equal(first.u_t, second.u_t)
        assert first.avalanches == second.avalanches
        assert [r.model_dump() for r in first.reports] == [r.model_dump() for r in second.reports]

    def test_snapshots(self) -> None:
        """Test snapshots are taken every snapshot_every steps"""
        output = run_simulation(DynamicsConfig(steps=50, snapshot_every=10), seed=2)
        assert [s.step for s in output.snapshots] == [10, 20, 30, 40, 50]
        last = output.snapshots[-1]
        assert len(last.in_degrees) == len(last.out_degrees) == last.agents
        assert sum(last.in_degrees) == sum(last.out_degrees) == last.links
        assert sum(last.degrees("total")) == 2 * last.links

    def test_batch_matches_single_runs(self) -> None:
        """Test the batch runner returns one independent run per seed"""
        cfg = DynamicsConfig(steps=100, theta=0.5)
        batch = run_batch(cfg, [1, 2], jobs=1)
        assert [o.seed for o in batch] == [1, 2]
        assert np.array_equal(batch[0].u_t, run_simulation(cfg, 1).u_t)
