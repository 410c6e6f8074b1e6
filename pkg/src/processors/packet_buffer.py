"""
Internal packet buffer for frames awaiting a controller decision
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from typing import Optional

from src.models.errors import BufferUnknownError
from src.models.frames import RawFrame
from src.openflow.constants import OFP_NO_BUFFER, BadRequestCode, ErrorType


@dataclass(frozen=True)
class BufferedPacket:
    buffer_id: int
    frame: RawFrame
    table_id: int
    stored_at: float


class PacketBuffer:
    """
    Bounded buffer_id -> frame store

    Attributes:
        capacity: Maximum live slots
        ttl: Seconds a frame may stay buffered (0 = forever)
        slots: Live buffer_id -> BufferedPacket
    """

    def __init__(self, capacity=256, ttl=10.0, clock=time.monotonic):
        if capacity < 0:
            raise ValueError('buffer capacity must not be negative')
        self.capacity = capacity
        self.ttl = ttl
        self.clock = clock
        self.slots: dict[int, BufferedPacket] = {}
        self._next_id = 0
        self._lock = threading.Lock()

    def _allocate_id(self):
        # 32-bit wrap; NO_BUFFER and live ids are never handed out
        while True:
            buffer_id = self._next_id
            self._next_id = (self._next_id + 1) & 0xFFFFFFFF
            if buffer_id != OFP_NO_BUFFER and buffer_id not in self.slots:
                return buffer_id

    def store(self, frame: RawFrame, table_id, now=None) -> Optional[int]:
        """
        Buffer a frame

        Returns:
            int: Fresh buffer_id, or None when the buffer is full
        """
        now = self.clock() if now is None else now
        with self._lock:
            if len(self.slots) >= self.capacity:
                return None
            buffer_id = self._allocate_id()
            self.slots[buffer_id] = BufferedPacket(buffer_id, frame, table_id, now)
            return buffer_id

    def take(self, buffer_id) -> BufferedPacket:
        """
        Remove and return a live buffered frame

        Raises:
            BufferUnknownError: buffer_id is not live (OFPBRC_BUFFER_UNKNOWN)
        """
        with self._lock:
            packet = self.slots.pop(buffer_id, None)
        if packet is None:
            raise BufferUnknownError(ErrorType.BAD_REQUEST, BadRequestCode.BUFFER_UNKNOWN,
                                     f'buffer {buffer_id} is not live')
        return packet

    def expire(self, now=None) -> list[BufferedPacket]:
        """Drop frames buffered for longer than ttl"""
        if not self.ttl:
            return []
        now = self.clock() if now is None else now
        with self._lock:
            stale = [p for p in self.slots.values() if now - p.stored_at >= self.ttl]
            for packet in stale:
                del self.slots[packet.buffer_id]
        return stale

    def live_ids(self):
        with self._lock:
            return set(self.slots)

    def __len__(self):
        return len(self.slots)

    def __contains__(self, buffer_id):
        return buffer_id in self.slots
