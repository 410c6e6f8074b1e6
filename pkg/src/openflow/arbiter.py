"""
OpenFlow channel output arbiter

Outbound messages wait in four FIFO classes and leave in strict priority
order: Packet-In, statistics, switch information/configuration, channel
setup and keep-alive. Lower classes can starve under sustained Packet-In
load.
"""

from __future__ import annotations

import threading
from collections import deque
from enum import IntEnum
from typing import Optional

from src.openflow.constants import MsgType
from src.openflow.messages import OfpMessage


class OutputClass(IntEnum):
    PACKET_IN = 0
    STATISTICS = 1
    SWITCH_INFO_CONFIG = 2
    CHANNEL_KEEPALIVE = 3


_CLASS_OF = {
    MsgType.PACKET_IN: OutputClass.PACKET_IN,
    MsgType.MULTIPART_REPLY: OutputClass.STATISTICS,
    MsgType.FLOW_REMOVED: OutputClass.STATISTICS,
    MsgType.HELLO: OutputClass.CHANNEL_KEEPALIVE,
    MsgType.ECHO_REQUEST: OutputClass.CHANNEL_KEEPALIVE,
    MsgType.ECHO_REPLY: OutputClass.CHANNEL_KEEPALIVE,
}


def classify(msg: OfpMessage) -> OutputClass:
    """Errors, features, config and barrier replies fall into SWITCH_INFO_CONFIG"""
    return _CLASS_OF.get(msg.msg_type, OutputClass.SWITCH_INFO_CONFIG)


class OutboundQueue:
    """
    Thread-safe four-class outbound queue

    Dataplane threads enqueue; the channel thread dequeues.

    Args:
        packet_in_limit: Maximum queued Packet-Ins (0 = unbounded)
    """

    def __init__(self, packet_in_limit=0):
        self.packet_in_limit = packet_in_limit
        self._queues = {cls: deque() for cls in OutputClass}
        self._ready = threading.Condition()

    def enqueue(self, msg: OfpMessage) -> bool:
        """
        Queue a message in its class

        Returns:
            bool: False when the Packet-In class is at its limit (message not queued)
        """
        output_class = classify(msg)
        with self._ready:
            queue = self._queues[output_class]
            if output_class == OutputClass.PACKET_IN and self.packet_in_limit and len(queue) >= self.packet_in_limit:
                return False
            queue.append(msg)
            self._ready.notify()
        return True

    def extend(self, messages):
        for msg in messages:
            self.enqueue(msg)

    def _pop(self) -> Optional[OfpMessage]:
        for output_class in OutputClass:
            queue = self._queues[output_class]
            if queue:
                return queue.popleft()
        return None

    def dequeue(self, timeout=None) -> Optional[OfpMessage]:
        """
        Oldest message of the highest non-empty class

        Args:
            timeout: None returns immediately; otherwise wait up to timeout
                seconds for a message

        Returns:
            OfpMessage or None
        """
        with self._ready:
            if timeout is not None:
                self._ready.wait_for(lambda: any(self._queues.values()), timeout)
            return self._pop()

    def drain(self) -> list[OfpMessage]:
        """Dequeue everything in arbiter order"""
        with self._ready:
            drained = []
            while (msg := self._pop()) is not None:
                drained.append(msg)
            return drained

    def depth(self, output_class=None):
        with self._ready:
            if output_class is None:
                return sum(len(q) for q in self._queues.values())
            return len(self._queues[output_class])

    def __len__(self):
        return self.depth()



def arbiter_dequeue(queue: OutboundQueue) -> Optional[OfpMessage]:
    """Non-blocking dequeue in arbiter order"""
    return queue.dequeue()
