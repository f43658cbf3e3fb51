"""Reproducible random streams.

Every random draw in the package comes from a Philox (counter-based) generator
whose key is hashed from ``(seed, stream, index)``. The stream used by trial
``i`` therefore does not depend on which thread runs it or in what order.
"""

from __future__ import annotations

import numpy as np

# stream tags keep trial paths, resampling groups and target fields disjoint
TRIALS = 0
RESAMPLE = 1
DIRECT_GROUPS = 2
POISSON_FIELD = 3
GAUSSIAN_MASS = 4
MISC = 5


def generator(seed: int, stream: int = MISC, index: int = 0) -> np.random.Generator:
    """Return the generator for substream ``index`` of ``stream`` under ``seed``."""
    if seed < 0 or index < 0:
        raise ValueError("seed and index must be nonnegative")
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream), int(index)))
    return np.random.Generator(np.random.Philox(seq))


def as_generator(rng: np.random.Generator | int | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return generator(0 if rng is None else int(rng))
