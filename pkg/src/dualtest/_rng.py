"""Seed derivation helpers.

All randomness in the package flows from explicit integer seeds through
``numpy.random.SeedSequence``, so trials, resamples and bootstrap draws are
reproducible regardless of execution order or parallelism.
"""

from __future__ import annotations

import numpy as np


def derive_rng(base_seed: int, *keys: int) -> np.random.Generator:
    """Return a Generator for the stream identified by (base_seed, *keys).

    Distinct key tuples yield statistically independent streams.
    """
    entropy = [int(base_seed)] + [int(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def as_rng(rng) -> np.random.Generator:
    """Coerce an int seed or Generator into a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    return derive_rng(int(rng))
