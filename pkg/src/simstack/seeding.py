"""Deterministic seed derivation for reproducible experiment streams."""

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seed(master_seed: int, *keys) -> int:
    """Derive a child seed from a master seed and a named key path.

    Every stochastic draw in an experiment gets its own (purpose, index)
    key, so adding a new purpose never perturbs existing streams. Floats
    are formatted with repr() to keep the mapping stable across runs.
    """
    parts = [str(int(master_seed) & _MASK64)]
    for key in keys:
        parts.append(repr(key) if isinstance(key, float) else str(key))
    digest = hashlib.sha256("/".join(parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def rng_from(master_seed: int, *keys) -> np.random.Generator:
    """Generator seeded by the derived child seed."""
    return np.random.default_rng(derive_seed(master_seed, *keys))
