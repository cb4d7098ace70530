"""Deterministic named random streams derived from one root seed."""

from __future__ import annotations

import zlib

import numpy as np


def stream(seed: int, *names) -> np.random.Generator:
    """A generator keyed by the root seed plus a path of names/integers.

    Distinct paths give independent streams, so data sampling, parameter
    init, batch shuffling and search can be varied independently.
    """
    entropy = [int(seed)]
    for name in names:
        if isinstance(name, int):
            entropy.append(name)
        else:
            entropy.append(zlib.crc32(str(name).encode()))
    return np.random.default_rng(np.random.SeedSequence(entropy))
