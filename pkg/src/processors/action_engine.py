"""
Action Execution Engine: forward, modify, drop and buffer frames
"""

from __future__ import annotations

import threading
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Union

from src.extractors.header_extractor import extract_layout
from src.models.actions import Action, ActionSet, ActionType
from src.models.errors import MessageError
from src.models.frames import RawFrame
from src.openflow.constants import (
    OFPCML_NO_BUFFER,
    OFPP_ALL,
    OFPP_CONTROLLER,
    OFPP_FLOOD,
    OFPP_IN_PORT,
    OFPP_TABLE,
    BadActionCode,
    ErrorType,
)
from src.processors import packet_modifier
from src.processors.packet_buffer import BufferedPacket, PacketBuffer
from src.utils.logger import SwitchLogger

log = SwitchLogger(__name__)

Egress = tuple[int, bytes]


@dataclass
class ActionCounters:
    """
    Action engine counters

    Attributes:
        executed: Frames run through execute()
        emitted: (port, frame) pairs produced
        dropped_empty: Frames whose action list produced no output
        dropped_ttl: Frames whose TTL expired (outputs made before expiry still leave)
        skipped_actions: Actions skipped because the header was absent
        buffered: Frames stored for the controller
        buffer_full: Store attempts refused by a full buffer
        released: Buffered frames released by the controller
    """

    executed: int = 0
    emitted: int = 0
    dropped_empty: int = 0
    dropped_ttl: int = 0
    skipped_actions: int = 0
    buffered: int = 0
    buffer_full: int = 0
    released: int = 0

    def to_dict(self):
        return asdict(self)


def validate_actions(actions: Iterable[Action], port_count, packet_out=False):
    """
    Reject output actions naming ports the switch does not have

    Raises:
        MessageError: OFPET_BAD_ACTION / OFPBAC_BAD_OUT_PORT
    """
    allowed = {OFPP_CONTROLLER, OFPP_ALL, OFPP_FLOOD, OFPP_IN_PORT}
    if packet_out:
        allowed.add(OFPP_TABLE)
    for action in actions:
        if action.kind != ActionType.OUTPUT:
            continue
        if action.port is None or not (action.port < port_count or action.port in allowed):
            raise MessageError(ErrorType.BAD_ACTION, BadActionCode.BAD_OUT_PORT,
                               f'invalid output port {action.port}')


def controller_max_len(actions: Iterable[Action]):
    """max_len of the first output:CONTROLLER action (NO_BUFFER when absent)"""
    for action in actions:
        if action.kind == ActionType.OUTPUT and action.port == OFPP_CONTROLLER:
            return action.max_len
    return OFPCML_NO_BUFFER


class ActionEngine:
    """
    Executes action sets and Packet-Out action lists

    Args:
        port_count: Number of physical ports (ALL/FLOOD expand over them)
        buffer: PacketBuffer for table-miss frames
    """

    def __init__(self, port_count, buffer: Optional[PacketBuffer] = None):
        self.port_count = port_count
        self.buffer = buffer if buffer is not None else PacketBuffer()
        self.counters = ActionCounters()
        self._lock = threading.Lock()

    def _count(self, **increments):
        with self._lock:
            for name, amount in increments.items():
                setattr(self.counters, name, getattr(self.counters, name) + amount)

    def _resolve(self, port, in_port):
        if port in (OFPP_ALL, OFPP_FLOOD):
            return [p for p in range(self.port_count) if p != in_port]
        if port == OFPP_IN_PORT:
            return [in_port]
        return [port]

    def execute(self, frame: RawFrame, actions: Union[ActionSet, Iterable[Action]]) -> list[Egress]:
        """
        Apply actions to a copy of the frame

        An ActionSet runs in action-set order; a plain list (Packet-Out)
        runs as given. Each output emits the frame as modified so far.
        A TTL that expires stops the list; outputs already made still leave.

        Args:
            frame: RawFrame to process
            actions: ActionSet or ordered list of Action

        Returns:
            list: (egress port, octets) pairs; empty means dropped. Reserved
            CONTROLLER and TABLE ports are returned as-is for the caller.
        """
        ordered = actions.ordered() if isinstance(actions, ActionSet) else list(actions)
        data = bytearray(frame.data)
        layout = extract_layout(data)
        emitted: list[Egress] = []
        skipped = 0

        for action in ordered:
            if action.kind == ActionType.OUTPUT:
                snapshot = bytes(data)
                emitted.extend((port, snapshot) for port in self._resolve(action.port, frame.ingress_port))
                continue
            outcome = packet_modifier.apply(data, layout, action)
            if outcome == packet_modifier.ModifyOutcome.TTL_EXPIRED:
                log.debug(f'port {frame.ingress_port}: TTL expired, {len(emitted)} earlier output(s) kept')
                self._count(executed=1, dropped_ttl=1, emitted=len(emitted), skipped_actions=skipped)
                return emitted
            if outcome == packet_modifier.ModifyOutcome.SKIPPED:
                skipped += 1
            elif action.kind in packet_modifier.STRUCTURAL:
                layout = extract_layout(data)

        self._count(executed=1, emitted=len(emitted), skipped_actions=skipped,
                    dropped_empty=0 if emitted else 1)
        return emitted

    def buffer_for_controller(self, frame: RawFrame, miss_table, now=None) -> Optional[int]:
        """
        Keep a frame until the controller decides

        Returns:
            int: buffer_id, or None when the buffer is full (caller drops or
            sends an unbuffered Packet-In)
        """
        buffer_id = self.buffer.store(frame, miss_table, now)
        if buffer_id is None:
            self._count(buffer_full=1)
        else:
            self._count(buffered=1)
        return buffer_id

    def take(self, buffer_id) -> BufferedPacket:
        """Remove a buffered frame without executing anything"""
        packet = self.buffer.take(buffer_id)
        self._count(released=1)
        return packet

    def release(self, buffer_id, actions) -> list[Egress]:
        """
        Release a buffered frame through controller-supplied actions

        Raises:
            BufferUnknownError: buffer_id not live
        """
        packet = self.take(buffer_id)
        return self.execute(packet.frame, actions)
