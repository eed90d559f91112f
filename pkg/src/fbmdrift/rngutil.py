"""Deterministic random-number streams.

All randomness in the package flows through :func:`substream`, which maps an
integer seed (plus an optional stream key) to an independent counter-based
generator. Philox is used because its streams are cheap to key and the draw
sequence is identical across platforms and numpy versions that ship it.
"""
from __future__ import annotations

import numpy as np

__all__ = ["substream"]


def substream(seed: int, *key: int) -> np.random.Generator:
    """Return a generator for the given seed and stream key.

    The same (seed, key) always yields the same draw sequence. Distinct
    keys under one seed give statistically independent streams.
    """
    if not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
