"""Seeded random streams.

All randomness derives from one non-negative integer seed (64 bits is the
documented range) fed to NumPy's PCG64 through a ``SeedSequence``. Named
streams (``make_rng(seed, "inject-error", trial)``) get independent,
reproducible generators, so a ten-trial protocol can be replayed trial by
trial.
"""

from __future__ import annotations

import zlib

import numpy as np

GENERATOR = "numpy.random.PCG64"


def _key(part: str | int) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    return int(part)


def make_rng(seed: int, *stream: str | int) -> np.random.Generator:
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    seq = np.random.SeedSequence(seed, spawn_key=tuple(_key(p) for p in stream))
    return np.random.Generator(np.random.PCG64(seq))
