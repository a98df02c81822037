"""Seed derivation so per-utterance streams do not depend on scheduling."""

from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def key_hash(key: str) -> int:
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def derive_rng(seed: int, *keys: str) -> np.random.Generator:
    """PCG64 stream for ``(seed, *keys)``.

    Identical arguments give identical streams in any process or thread.
    """
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    entropy = [seed] + [key_hash(k) for k in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
