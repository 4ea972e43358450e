"""Counter-based random streams keyed by a master seed and an index path.

Every random quantity in the package is drawn from a stream identified by
``(seed, key...)``, so results do not depend on execution order or on how
work is spread over threads.
"""
import numpy as np

# stream tags
DIRECTIONS = 0
BOOTSTRAP = 1
DATA = 2
TEST = 3


def stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *key: int) -> int:
    """A 64-bit seed for the sub-stream ``key`` of ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


def as_generator(rng_seed) -> np.random.Generator:
    if isinstance(rng_seed, np.random.Generator):
        return rng_seed
    return stream(rng_seed)
