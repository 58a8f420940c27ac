"""
Named random substreams derived from one master seed
"""

import numpy as np

# Fixed spawn keys keep each component reproducible on its own
STREAMS = {"growth": 0, "covering": 1, "sampling": 2}


def substream(seed: int, name: str) -> np.random.Generator:
    """Independent Generator for one named component of a run"""
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(STREAMS[name],))
    )


def substream_seeds(seed: int, name: str, count: int) -> list[int]:
    """Integer seeds for repeated evaluations inside one component"""
    state = np.random.SeedSequence(seed, spawn_key=(STREAMS[name],))
    return [int(value) for value in state.generate_state(count)]
