"""
Virtual ports: bounded input/output FIFOs plus per-port counters
"""

from __future__ import annotations

import threading
import time
from collections import deque
from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional

from src.models.frames import RawFrame


@dataclass
class PortCounters:
    """
    Attributes:
        rx_packets / rx_bytes: Every frame offered to the port, accepted or not
        rx_dropped: Frames refused because the input queue was full
        tx_packets / tx_bytes: Frames placed on the output queue
        tx_dropped: Frames refused because the output queue was full
    """

    rx_packets: int = 0
    rx_bytes: int = 0
    tx_packets: int = 0
    tx_bytes: int = 0
    rx_dropped: int = 0
    tx_dropped: int = 0

    def to_dict(self):
        return asdict(self)


class Egressed(NamedTuple):
    """A frame waiting on (or taken from) an output queue"""

    data: bytes
    arrived_at: int
    departed_at: int


class Port:
    """
    One virtual port

    Args:
        port_id: 0-based index (equals the OpenFlow port number)
        queue_capacity: Input FIFO bound
        output_capacity: Output FIFO bound
        sink: Optional object with write(data, timestamp_ns) receiving every
            transmitted frame (a PcapWriter for replay runs)
    """

    def __init__(self, port_id, queue_capacity=1024, output_capacity=1024, sink=None):
        self.port_id = port_id
        self.queue_capacity = queue_capacity
        self.output_capacity = output_capacity
        self.sink = sink
        self.hw_addr = 0x020000000000 | (port_id + 1)
        self.name = f'port{port_id}'
        self.counters = PortCounters()
        self.created_at = time.monotonic()
        self.input_queue: deque[RawFrame] = deque()
        self.output_queue: deque[Egressed] = deque()
        self._lock = threading.Lock()

    def receive(self, data, arrived_at=None) -> bool:
        """
        Offer a frame to the input queue

        Returns:
            bool: True if queued, False if dropped on a full queue
        """
        frame = RawFrame(self.port_id, bytes(data)) if arrived_at is None \
            else RawFrame(self.port_id, bytes(data), arrived_at)
        with self._lock:
            self.counters.rx_packets += 1
            self.counters.rx_bytes += len(frame.data)
            if len(self.input_queue) >= self.queue_capacity:
                self.counters.rx_dropped += 1
                return False
            self.input_queue.append(frame)
            return True

    def pop_input(self) -> Optional[RawFrame]:
        with self._lock:
            return self.input_queue.popleft() if self.input_queue else None

    def transmit(self, data, arrived_at) -> bool:
        """
        Place a frame on the output queue

        Returns:
            bool: False when the output queue was full (tx_dropped counted)
        """
        departed_at = time.monotonic_ns()
        with self._lock:
            if len(self.output_queue) >= self.output_capacity:
                self.counters.tx_dropped += 1
                return False
            self.output_queue.append(Egressed(data, arrived_at, departed_at))
            self.counters.tx_packets += 1
            self.counters.tx_bytes += len(data)
            if self.sink is not None:
                self.sink.write(data, departed_at)
        return True

    def drain_output(self, limit=None) -> list[Egressed]:
        """Take frames off the output queue in FIFO order"""
        with self._lock:
            count = len(self.output_queue) if limit is None else min(limit, len(self.output_queue))
            return [self.output_queue.popleft() for _ in range(count)]

    @property
    def occupancy(self):
        return len(self.input_queue)

    def snapshot(self) -> PortCounters:
        with self._lock:
            return PortCounters(**asdict(self.counters))

    def uptime(self):
        return time.monotonic() - self.created_at

    def close(self):
        if self.sink is not None:
            self.sink.close()
