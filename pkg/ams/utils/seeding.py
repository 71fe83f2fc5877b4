"""
Deterministic RNG streams.

Every consumer of randomness gets its own numpy Generator derived from the
master seed plus integer tags, so draws in one stream never shift another.
"""

import numpy as np

# stream tags
POOL = 11
TASKS = 12
SELECTION = 13
TASK_MODEL_INIT = 14
POLICY_INIT = 15
EVALUATION = 16


def make_rng(seed: int, *tags: int) -> np.random.Generator:
    """Generator seeded from (seed, *tags)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *[int(t) for t in tags]]))
