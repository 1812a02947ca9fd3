"""Seeded random-number plumbing.

Every randomized operation in this package takes an explicit numpy
``Generator``.  Experiments derive independent child generators from a
single root seed by stable labels, so identical seeds give identical
transcripts and trial loops can be parallelized without sharing state.
"""

from __future__ import annotations

import hashlib

import numpy as np

SeededRng = np.random.Generator


def make_rng(seed: int) -> SeededRng:
    """Root generator for a root seed."""
    return np.random.default_rng(seed)


def _label_entropy(label: str) -> int:
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def derive_rng(seed: int, *labels: str | int) -> SeededRng:
    """Child generator derived from a root seed and a label path.

    Labels may be strings (hashed) or integers (used directly, e.g. trial
    counters).  The same (seed, labels) pair always yields the same stream.
    """
    key = tuple(_label_entropy(x) if isinstance(x, str) else int(x) for x in labels)
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))
