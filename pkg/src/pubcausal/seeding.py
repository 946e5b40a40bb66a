"""Deterministic per-task random generators derived from one master seed."""
from __future__ import annotations

import hashlib

import numpy as np


def spawn_key(*parts) -> tuple[int, ...]:
    """Stable 4-word key from arbitrary labels (independent of PYTHONHASHSEED)."""
    digest = hashlib.sha256("\x1f".join(map(str, parts)).encode()).digest()
    return tuple(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))


def derive_seed_sequence(master: int, *parts) -> np.random.SeedSequence:
    return np.random.SeedSequence(master, spawn_key=spawn_key(*parts))


def derive_rng(master: int, *parts) -> np.random.Generator:
    return np.random.default_rng(derive_seed_sequence(master, *parts))


def derive_int(master: int, *parts) -> int:
    """A 31-bit integer seed for libraries that want an ``int``."""
    return int(derive_seed_sequence(master, *parts).generate_state(1)[0] & 0x7FFFFFFF)
