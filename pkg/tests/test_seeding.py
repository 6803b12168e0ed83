"""Seed derivation: stable, key-sensitive, collision-free in practice."""

import numpy as np

from simstack import derive_seed, rng_from


def test_derived_seeds_are_frozen():
    # pinned values: the whole stream map depends on these staying put
    assert derive_seed(0, "a", 1) == 16684863215777521513
    assert derive_seed(42, "payload", 3, 2) == 12079748073432811328
    assert derive_seed(7, "sweep", "N", 25) == 5618903609883197950
    assert derive_seed(0, "x", 0.5) == 4537675416082949187


def test_key_sensitivity():
    base = derive_seed(3, "payload", 0, 0)
    assert base == derive_seed(3, "payload", 0, 0)
    assert base != derive_seed(3, "payload", 0, 1)
    assert base != derive_seed(3, "payload", 1, 0)
    assert base != derive_seed(3, "noise", 0, 0)
    assert base != derive_seed(4, "payload", 0, 0)


def test_float_keys_do_not_alias_ints():
    assert derive_seed(0, "snr", 4.0) != derive_seed(0, "snr", 4)
    # repr-based float formatting is stable
    assert derive_seed(0, "snr", 0.1) == derive_seed(0, "snr", 0.1)


def test_no_collisions_over_a_grid():
    seen = set()
    for purpose in ("layout", "payload", "noise"):
        for i in range(50):
            for j in range(10):
                seen.add(derive_seed(123, purpose, i, j))
    assert len(seen) == 3 * 50 * 10


def test_rng_from_reproduces_streams():
    a = rng_from(5, "pilots", 2).standard_normal(8)
    b = rng_from(5, "pilots", 2).standard_normal(8)
    c = rng_from(5, "pilots", 3).standard_normal(8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
