"""
Shared fixtures for the tradenet test suite
"""

import os

os.environ.setdefault("TRADENET_LOG_LEVEL", "WARNING")
os.environ.setdefault("TRADENET_DEBUG", "true")

from typing import Callable, Iterable, Optional, Sequence, Tuple

import numpy as np
import pytest

from tradenet.schemas import GrowthConfig
from tradenet.services.network import TradeNetwork

NetworkFactory = Callable[..., TradeNetwork]
ParetoSampler = Callable[..., np.ndarray]


def build_network(
    n_agents: int,
    edges: Iterable[Tuple[int, int]],
    energies: Optional[Sequence[float]] = None,
    seed: int = 0,
    **growth: float,
) -> TradeNetwork:
    """Network with the given agents and unit-weight links, no growth history"""
    net = TradeNetwork(GrowthConfig(**growth), np.random.default_rng(seed))
    for _ in range(n_agents):
        net.add_agent()
    for src, dst in edges:
        assert net.add_link(src, dst)
    if energies is not None:
        net.energies[:] = energies
    return net


@pytest.fixture
def network_from_edges() -> NetworkFactory:
    """Factory building a network from an explicit edge list"""
    return build_network


def pareto(m: float, size: int, seed: int, x_min: float = 1.0) -> np.ndarray:
    """Classical Pareto samples with P(X >= s) = (s / x_min)^-m"""
    rng = np.random.default_rng(seed)
    return x_min * (1.0 + rng.pareto(m, size))


@pytest.fixture
def pareto_samples() -> ParetoSampler:
    """Sampler for synthetic Pareto tails"""
    return pareto
