"""
RAM-emulated CAM/TCAM

The key is cut into chunks of `chunk_width` bits. Every chunk owns a bank
of 2^chunk_width bit-vectors (one bit per slot); the chunk value of a
lookup key addresses one word per bank and the AND of those words is the
match vector. Writing a ternary entry sets its slot bit at every address
the (value, mask) chunk accepts, so a fully wildcarded chunk touches all
2^chunk_width words and an exact chunk touches exactly one.

Priority selection mirrors the priority encoder: highest controller
priority wins, ties go to the lowest slot.
"""

from __future__ import annotations

from typing import Iterable, Optional

import numpy as np

from src.models.errors import CapacityError
from src.models.flow import MaskedKey

WORD_BITS = 64
_WORD = np.dtype('<u8')


class TernaryMatcher:
    """
    Chunked bit-vector CAM/TCAM

    Attributes:
        key_width: Key width K in bits
        chunk_width: Bits per chunk c
        capacity: Number of slots N
        banks: uint64 array (chunks, 2^c, ceil(N/64)), one bit per slot
        slot_priority: Priority per slot
        slot_occupied: Occupancy per slot
        slot_key: MaskedKey per slot (None when vacant)
    """

    def __init__(self, key_width, capacity, chunk_width=8):
        if key_width <= 0 or capacity <= 0:
            raise ValueError('key_width and capacity must be positive')
        if not 1 <= chunk_width <= 16:
            raise ValueError('chunk_width must be between 1 and 16 bits')

        self.key_width = key_width
        self.chunk_width = chunk_width
        self.capacity = capacity
        self.chunk_count = -(-key_width // chunk_width)
        self.word_count = -(-capacity // WORD_BITS)

        self._key_mask = (1 << key_width) - 1
        self._chunk_mask = (1 << chunk_width) - 1
        self._chunk_rows = np.arange(self.chunk_count)
        self._addresses = np.arange(1 << chunk_width, dtype=np.int64)

        self.banks = np.zeros((self.chunk_count, 1 << chunk_width, self.word_count), dtype=_WORD)
        self.slot_priority = np.zeros(capacity, dtype=np.int64)
        self.slot_occupied = np.zeros(capacity, dtype=bool)
        self.slot_key: list[Optional[MaskedKey]] = [None] * capacity

    def _split(self, value):
        """Chunk addresses of a K-bit value, least significant chunk first"""
        value &= self._key_mask
        if self.chunk_width == 8:
            return np.frombuffer(value.to_bytes(self.chunk_count, 'little'), dtype=np.uint8).astype(np.int64)
        c, m = self.chunk_width, self._chunk_mask
        return np.array([(value >> (i * c)) & m for i in range(self.chunk_count)], dtype=np.int64)

    def lookup(self, key) -> Optional[tuple[int, int]]:
        """
        Match a key against every occupied slot

        Args:
            key: K-bit integer

        Returns:
            tuple: (slot, priority) of the winning entry, or None on a miss
        """
        words = self.banks[self._chunk_rows, self._split(key)]
        vector = np.bitwise_and.reduce(words, axis=0)
        if not vector.any():
            return None

        bits = np.unpackbits(vector.astype(_WORD, copy=False).view(np.uint8), bitorder='little')[:self.capacity]
        slots = np.flatnonzero(bits)
        best = slots[np.argmax(self.slot_priority[slots])]
        return int(best), int(self.slot_priority[best])

    def insert(self, key: MaskedKey, priority) -> int:
        """
        Write an entry into the lowest vacant slot

        Args:
            key: MaskedKey (value, mask) over K bits
            priority: Controller priority

        Returns:
            int: Slot index

        Raises:
            CapacityError: No vacant slot
        """
        vacant = np.flatnonzero(~self.slot_occupied)
        if vacant.size == 0:
            raise CapacityError(f'matcher full ({self.capacity} slots)')
        slot = int(vacant[0])
        self._write(slot, key, priority)
        return slot

    def _write(self, slot, key, priority):
        key = MaskedKey.of(key.value & self._key_mask, key.mask & self._key_mask)
        values = self._split(key.value)
        masks = self._split(key.mask)
        # accepted[i, a] is True when address a satisfies chunk i's (value, mask)
        accepted = (self._addresses[None, :] & masks[:, None]) == values[:, None]

        word, bit = divmod(slot, WORD_BITS)
        column = self.banks[:, :, word]
        column[accepted] |= np.uint64(1 << bit)

        self.slot_occupied[slot] = True
        self.slot_priority[slot] = priority
        self.slot_key[slot] = key

    def remove(self, slot):
        """Vacate a slot; removing a vacant slot is a no-op"""
        if not self.slot_occupied[slot]:
            return
        word, bit = divmod(slot, WORD_BITS)
        self.banks[:, :, word] &= ~np.uint64(1 << bit)
        self.slot_occupied[slot] = False
        self.slot_priority[slot] = 0
        self.slot_key[slot] = None

    def entries(self):
        """Occupied (key, priority, slot) triples in slot order"""
        return [
            (self.slot_key[s], int(self.slot_priority[s]), int(s))
            for s in np.flatnonzero(self.slot_occupied)
        ]

    def rebuilt(self):
        """A fresh matcher holding the same entries in the same slots"""
        fresh = TernaryMatcher(self.key_width, self.capacity, self.chunk_width)
        for key, priority, slot in self.entries():
            fresh._write(slot, key, priority)
        return fresh

    @property
    def full(self):
        return bool(self.slot_occupied.all())

    def __len__(self):
        return int(self.slot_occupied.sum())


def oracle_lookup(entries: Iterable[tuple[MaskedKey, int, int]], key) -> Optional[tuple[int, int]]:
    """
    Linear-scan reference lookup

    Args:
        entries: (MaskedKey, priority, slot) triples
        key: Integer key

    Returns:
        tuple: (slot, priority) of the max-priority match, ties to the lowest slot
    """
    best = None
    for masked, priority, slot in entries:
        if key & masked.mask != masked.value:
            continue
        if best is None or priority > best[1] or (priority == best[1] and slot < best[0]):
            best = (slot, priority)
    return best


class OracleMatcher:
    """Linear-scan matcher with the TernaryMatcher interface"""

    def __init__(self, key_width, capacity, chunk_width=8):
        self.key_width = key_width
        self.capacity = capacity
        self.chunk_width = chunk_width
        self._key_mask = (1 << key_width) - 1
        self._slots: dict[int, tuple[MaskedKey, int]] = {}

    def lookup(self, key):
        return oracle_lookup(self.entries(), key & self._key_mask)

    def insert(self, key, priority):
        for slot in range(self.capacity):
            if slot not in self._slots:
                self._slots[slot] = (MaskedKey.of(key.value & self._key_mask, key.mask & self._key_mask), priority)
                return slot
        raise CapacityError(f'matcher full ({self.capacity} slots)')

    def remove(self, slot):
        self._slots.pop(slot, None)

    def entries(self):
        return [(key, priority, slot) for slot, (key, priority) in sorted(self._slots.items())]

    @property
    def full(self):
        return len(self._slots) >= self.capacity

    def __len__(self):
        return len(self._slots)
