"""Deterministic seed derivation.

All randomness in the package flows from a single integer seed.  Sub-seeds
for independent purposes (shuffling, pair sampling, per-sample synthesis,
...) are derived by hashing ``(seed, *tags)`` with SHA-256, which is stable
across processes and platforms, unlike Python's builtin ``hash``.
"""

import hashlib

import numpy as np


def derive_seed(seed, *tags):
    """Return a 128-bit integer seed derived from ``seed`` and purpose tags.

    Tags may be strings or integers; their repr participates in the hash,
    so ``derive_seed(1, "a")`` and ``derive_seed(1, "b")`` are unrelated
    streams.
    """
    key = repr((int(seed),) + tags).encode("utf-8")
    digest = hashlib.sha256(key).digest()
    return int.from_bytes(digest[:16], "little")


def rng_for(seed, *tags):
    """A `numpy.random.Generator` seeded from ``derive_seed(seed, *tags)``."""
    return np.random.default_rng(derive_seed(seed, *tags))
