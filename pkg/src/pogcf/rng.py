"""Named, platform-stable random substreams derived from one seed."""

from __future__ import annotations

import hashlib

import numpy as np


def substream(seed: int, name: str) -> np.random.Generator:
    """Generator for a named substream of the master seed.

    The name is hashed (sha256, so stable across platforms and runs) into
    a spawn key, letting components re-seed independently.
    """
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    key = int.from_bytes(digest[:8], "little")
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(key,)))
