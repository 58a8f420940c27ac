from . import dynamics, ingest, metrics, network, renorm, risk, streams, tails
from .dynamics import run_batch, run_simulation
from .network import TradeNetwork, create_network

__all__ = [
    "dynamics",
    "ingest",
    "metrics",
    "network",
    "renorm",
    "risk",
    "streams",
    "tails",
    "TradeNetwork",
    "create_network",
    "run_simulation",
    "run_batch",
]
