"""
Chunked bit-vector matcher against the linear-scan reference
"""

import numpy as np
import pytest

from src.models.errors import CapacityError
from src.models.flow import MaskedKey
from src.processors.ternary_matcher import OracleMatcher, TernaryMatcher, oracle_lookup

KEY_WIDTH = 32


def _random_key(rng, width, wildcard_rate=0.3):
    mask = 0
    for chunk in range(width // 8):
        if rng.random() >= wildcard_rate:
            mask |= 0xFF << (8 * chunk)
        elif rng.random() < 0.5:
            mask |= int(rng.integers(0, 256)) << (8 * chunk)
    value = int(rng.integers(0, 1 << width)) & mask
    return MaskedKey(value, mask)


def _lookup_key(rng, matcher, width):
    """Keys that hit stored entries plus uniformly random keys"""
    entries = matcher.entries()
    if entries and rng.random() < 0.7:
        key, _, _ = entries[int(rng.integers(0, len(entries)))]
        return key.value | (int(rng.integers(0, 1 << width)) & ~key.mask & ((1 << width) - 1))
    return int(rng.integers(0, 1 << width))


def test_exact_match():
    matcher = TernaryMatcher(KEY_WIDTH, 8)
    slot = matcher.insert(MaskedKey.exact(0xDEADBEEF, KEY_WIDTH), 10)
    assert matcher.lookup(0xDEADBEEF) == (slot, 10)
    assert matcher.lookup(0xDEADBEEE) is None


def test_wildcard_chunk_matches_everything_in_it():
    matcher = TernaryMatcher(KEY_WIDTH, 8)
    slot = matcher.insert(MaskedKey(0x12000000, 0xFF000000), 5)
    assert matcher.lookup(0x12345678) == (slot, 5)
    assert matcher.lookup(0x12000000) == (slot, 5)
    assert matcher.lookup(0x13345678) is None


def test_partial_chunk_mask():
    matcher = TernaryMatcher(16, 4)
    slot = matcher.insert(MaskedKey(0x0080, 0x00F0), 1)
    assert matcher.lookup(0xAB8F) == (slot, 1)
    assert matcher.lookup(0xAB7F) is None


def test_highest_priority_wins():
    matcher = TernaryMatcher(KEY_WIDTH, 8)
    matcher.insert(MaskedKey(0, 0), 1)
    best = matcher.insert(MaskedKey.exact(42, KEY_WIDTH), 100)
    matcher.insert(MaskedKey(0, 0xFFFF0000), 50)
    assert matcher.lookup(42) == (best, 100)


def test_priority_tie_goes_to_lowest_slot():
    matcher = TernaryMatcher(KEY_WIDTH, 8)
    first = matcher.insert(MaskedKey(0, 0), 7)
    matcher.insert(MaskedKey(0, 0), 7)
    assert matcher.lookup(99) == (first, 7)


def test_remove_and_reuse_slot():
    matcher = TernaryMatcher(KEY_WIDTH, 2)
    a = matcher.insert(MaskedKey.exact(1, KEY_WIDTH), 1)
    matcher.insert(MaskedKey.exact(2, KEY_WIDTH), 1)
    assert matcher.full
    matcher.remove(a)
    assert matcher.lookup(1) is None
    assert matcher.insert(MaskedKey.exact(3, KEY_WIDTH), 1) == a
    assert matcher.lookup(3) == (a, 1)
    matcher.remove(a)
    matcher.remove(a)
    assert len(matcher) == 1


def test_full_matcher_raises():
    matcher = TernaryMatcher(KEY_WIDTH, 3)
    for i in range(3):
        matcher.insert(MaskedKey.exact(i, KEY_WIDTH), 1)
    with pytest.raises(CapacityError):
        matcher.insert(MaskedKey.exact(9, KEY_WIDTH), 1)


def test_capacity_spanning_several_words():
    matcher = TernaryMatcher(KEY_WIDTH, 200)
    for i in range(200):
        matcher.insert(MaskedKey.exact(i, KEY_WIDTH), i)
    assert matcher.banks.shape[2] == 4
    assert matcher.lookup(150) == (150, 150)
    assert matcher.lookup(199) == (199, 199)


def test_odd_key_width_and_chunk_width():
    matcher = TernaryMatcher(13, 16, chunk_width=5)
    slot = matcher.insert(MaskedKey(0b1010000000000, 0b1110000000000), 3)
    assert matcher.lookup(0b1011111111111) == (slot, 3)
    assert matcher.lookup(0b0101111111111) is None


def test_invalid_geometry():
    with pytest.raises(ValueError):
        TernaryMatcher(0, 8)
    with pytest.raises(ValueError):
        TernaryMatcher(32, 8, chunk_width=17)


def test_rebuilt_matches_live_matcher():
    rng = np.random.default_rng(5)
    matcher = TernaryMatcher(KEY_WIDTH, 64)
    for _ in range(40):
        matcher.insert(_random_key(rng, KEY_WIDTH), int(rng.integers(0, 8)))
    for slot in range(0, 40, 3):
        matcher.remove(slot)
    fresh = matcher.rebuilt()
    assert np.array_equal(fresh.banks, matcher.banks)
    for _ in range(500):
        key = _lookup_key(rng, matcher, KEY_WIDTH)
        assert fresh.lookup(key) == matcher.lookup(key)


def _differential(operations, capacity, seed, chunk_width=8, width=KEY_WIDTH):
    rng = np.random.default_rng(seed)
    matcher = TernaryMatcher(width, capacity, chunk_width)
    oracle = OracleMatcher(width, capacity, chunk_width)
    for _ in range(operations):
        roll = rng.random()
        if roll < 0.3 and not matcher.full:
            key = _random_key(rng, width)
            priority = int(rng.integers(0, 16))
            assert matcher.insert(key, priority) == oracle.insert(key, priority)
        elif roll < 0.4 and len(matcher):
            slot = matcher.entries()[int(rng.integers(0, len(matcher)))][2]
            matcher.remove(slot)
            oracle.remove(slot)
        else:
            key = _lookup_key(rng, matcher, width)
            assert matcher.lookup(key) == oracle.lookup(key)
            assert matcher.lookup(key) == oracle_lookup(matcher.entries(), key)
    assert matcher.entries() == oracle.entries()
    rebuilt = matcher.rebuilt()
    for key, _, _ in matcher.entries():
        assert rebuilt.lookup(key.value) == oracle.lookup(key.value)


@pytest.mark.parametrize('chunk_width', [4, 8, 11])
def test_matches_oracle(chunk_width):
    _differential(3000, 48, seed=chunk_width, chunk_width=chunk_width)


@pytest.mark.slow
def test_matches_oracle_full_run():
    _differential(100_000, 1024, seed=2024)
