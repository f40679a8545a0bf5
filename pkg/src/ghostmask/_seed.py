"""Deterministic seed derivation.

Every random stream in the package is a child of a single integer seed.
Children are keyed by a stage name (hashed) and optional integer indices,
so a stage or a single measurement index can be regenerated in isolation
and concurrent workers never share generator state.
"""
import hashlib

import numpy as np


def stage_key(name):
    """Stable 32-bit integer for a stage name."""
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def seed_sequence(seed, stage=None, *index):
    key = []
    if stage is not None:
        key.append(stage_key(stage))
    key.extend(int(i) for i in index)
    return np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(key))


def rng(seed, stage=None, *index):
    """Generator for ``(seed, stage, *index)``."""
    return np.random.default_rng(seed_sequence(seed, stage, *index))


def derive_seed(seed, stage, *index):
    """Plain 63-bit integer seed for a sub-stage."""
    state = seed_sequence(seed, stage, *index).generate_state(2, dtype=np.uint32)
    return int(state[0]) | (int(state[1] & 0x7FFFFFFF) << 32)


CHUNK = 256


def chunked(seed, stage, n, chunk=CHUNK):
    """Yield ``(start, stop, generator)`` covering ``range(n)``.

    Each chunk of indices owns an independent stream, so vectorised draws
    stay cheap while results do not depend on how chunks are scheduled.
    """
    for c, start in enumerate(range(0, n, chunk)):
        yield start, min(start + chunk, n), rng(seed, stage, c)
