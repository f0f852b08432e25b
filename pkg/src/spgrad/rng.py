"""Counter-based derivation of independent random streams from one master seed.

Every stochastic component draws from a stream addressed by a master seed
plus an integer key path, e.g. (iteration, trajectory index).  The same
(seed, path) pair always yields the same stream, so results do not depend
on the order in which streams are created or consumed, and trajectories
may be collected concurrently.
"""
from __future__ import annotations

import numpy as np

from .errors import ConfigurationError

_MAX_SEED = 2**64 - 1


def substream(master_seed: int, *path: int) -> np.random.Generator:
    """Return the generator for the stream addressed by ``path``."""
    if not 0 <= int(master_seed) <= _MAX_SEED:
        raise ConfigurationError(f"seed must be an unsigned 64-bit integer, got {master_seed}")
    key = tuple(int(p) for p in path)
    if any(p < 0 for p in key):
        raise ConfigurationError(f"stream path must be non-negative, got {key}")
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=key)
    return np.random.default_rng(seq)
