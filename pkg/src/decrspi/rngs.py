"""Seed-keyed random stream derivation.

All randomness in a solve flows from one integer seed. Streams are
addressed by integer key tuples so that any consumer can be handed the
exact same stream twice (common random numbers) or an independent one,
without threading generator objects through every call.
"""

from __future__ import annotations

import numpy as np

# Key-space tags for the major stream families used by the solver.
INIT_POLICY = 0
BELIEF_SAMPLING = 1
PHI = 2
EVAL = 3
START_NODE = 4
EVALUATE = 5


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator addressed by (seed, key).

    The same (seed, key) always yields an identical stream; distinct keys
    yield independent streams.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def substreams(rng: np.random.Generator, n: int) -> list[np.random.Generator]:
    """Split n independent child streams off a generator.

    Children depend only on the generator's current spawn state, so a
    batch of per-trajectory streams is reproducible and can be consumed
    in any order (or in parallel) without changing results.
    """
    return rng.spawn(n)
