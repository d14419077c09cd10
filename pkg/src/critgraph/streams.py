"""Reproducible per-replicate random streams.

Every replicate draws from its own Philox stream keyed by
``(master, replicate, role)``; the stream never depends on worker count or
scheduling.
"""
from __future__ import annotations

import numpy as np

ROLES = {
    "clocks": 0,
    "limit": 1,
    "bernoulli": 2,
    "poisson": 3,
    "sbpp": 4,
    "limit_fine": 5,
    "misc": 6,
}


def seed_streams(master: int, replicate: int, role: str) -> np.random.Generator:
    if role not in ROLES:
        raise ValueError(f"unknown stream role {role!r}")
    if master < 0 or replicate < 0:
        raise ValueError("master seed and replicate index must be nonnegative")
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=(int(replicate), ROLES[role]))
    return np.random.Generator(np.random.Philox(ss))


def stream_id(master: int, replicate: int, role: str) -> tuple[int, int, int]:
    """Bookkeeping key identifying a stream."""
    return (int(master), int(replicate), ROLES[role])
