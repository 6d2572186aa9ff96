import zlib

import numpy as np


def substream(seed: int, name: str) -> np.random.Generator:
    """Return the generator for the named stream of a run seed.

    Each name maps to its own spawn key, so draws on one stream never
    depend on how many other streams exist or how much they consumed.
    """

    key = zlib.crc32(name.encode("utf-8"))
    return np.random.default_rng(
        np.random.SeedSequence(int(seed), spawn_key=(key,))
    )
