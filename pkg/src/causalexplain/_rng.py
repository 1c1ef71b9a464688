"""Seed derivation and portable random streams.

All randomness flows from integer seeds through ``numpy.random.PCG64``.
Independent streams are split off with ``SeedSequence`` spawn keys or with
labeled hashing, so adding a consumer never shifts the draws of another.
Gaussian variates come from uniform draws pushed through ``_special.ndtri``.
"""

import hashlib

import numpy as np

from ._special import ndtri

MASK64 = (1 << 64) - 1


def derive_seed(master, *labels):
    """Deterministic 64-bit seed from a master seed and a path of labels."""
    text = ":".join([str(int(master) & MASK64), *map(str, labels)])
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def generator(seed, *spawn_key):
    """PCG64 generator for ``seed``; ``spawn_key`` selects an independent substream."""
    ss = np.random.SeedSequence(int(seed) & MASK64, spawn_key=tuple(int(k) for k in spawn_key))
    return np.random.Generator(np.random.PCG64(ss))


def uniform_open(gen, size):
    """Uniform draws on the open interval (0, 1) with 53 random bits each."""
    k = gen.integers(0, 1 << 53, size=size, dtype=np.int64)
    return (k.astype(np.float64) + 0.5) * (1.0 / (1 << 53))


def standard_normal(gen, size):
    """Standard normal draws by inverse-CDF transform of ``uniform_open``."""
    return ndtri(uniform_open(gen, size))
