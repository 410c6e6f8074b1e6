"""
OpenFlow channel state machine (switch side)

step() consumes one event and returns the messages to send. It runs on a
single thread per connection; dataplane threads only touch the thread-safe
XidSource and OutboundQueue.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Union

from src.models.errors import FlowModError, MessageError, OpenFlowError
from src.models.flow import FlowMod, InstructionSet, MatchField, RemovedFlow
from src.models.frames import RawFrame
from src.openflow import messages as ofm
from src.openflow.constants import (
    OFP_NO_BUFFER,
    OFP_VERSION,
    OFPC_FLOW_STATS,
    OFPC_PORT_STATS,
    OFPC_TABLE_STATS,
    OFPTT_ALL,
    BadInstructionCode,
    BadRequestCode,
    ErrorType,
    HelloFailedCode,
    MultipartType,
    PacketInReason,
)
from src.openflow.structs import (
    ApplyActions,
    ClearActions,
    GotoTable,
    OFPDescStats,
    OFPFlowStats,
    OFPTableStats,
    WriteActions,
)
from src.processors.action_engine import validate_actions
from src.processors.flow_pipeline import StatsScope
from src.utils.logger import SwitchLogger

log = SwitchLogger(__name__, prefix='[channel] ')

SWITCH_CAPABILITIES = OFPC_FLOW_STATS | OFPC_TABLE_STATS | OFPC_PORT_STATS

DESCRIPTION = OFPDescStats(
    mfr_desc='ofswitch',
    hw_desc='RAM-emulated TCAM software switch',
    sw_desc='ofswitch 1.0.0',
    serial_num='0',
    dp_desc='OpenFlow 1.3 software datapath',
)


class ChannelState(str, Enum):
    FRESH = 'fresh'
    HELLO_SENT = 'hello-sent'
    NEGOTIATED = 'negotiated'
    CLOSED = 'closed'


class XidSource:
    """Thread-safe xid counter for switch-initiated messages (starts at 1)"""

    def __init__(self, start=1):
        self._counter = itertools.count(start)
        self._lock = threading.Lock()

    def next(self):
        with self._lock:
            return next(self._counter) & 0xFFFFFFFF


# ---------------------------------------------------------------------------
# Events

@dataclass(frozen=True)
class Received:
    msg: ofm.OfpMessage


@dataclass(frozen=True)
class Malformed:
    """A message failed to decode but the stream framing is intact"""

    error: OpenFlowError


@dataclass(frozen=True)
class Timer:
    now: float


@dataclass(frozen=True)
class PacketInEvent:
    """
    Dataplane notification that a frame goes to the controller

    Attributes:
        frame: The frame as received
        data: Payload to carry (already truncated when buffered)
        buffer_id: Live buffer id or NO_BUFFER
        reason: PacketInReason
        table_id: Table that produced the miss (or the action)
        cookie: Cookie of the entry that sent it (all ones on a miss)
    """

    frame: RawFrame
    data: bytes
    buffer_id: int = OFP_NO_BUFFER
    reason: int = PacketInReason.NO_MATCH
    table_id: int = 0
    cookie: int = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class FlowRemovedEvent:
    removed: RemovedFlow


ChannelEvent = Union[Received, Malformed, Timer, PacketInEvent, FlowRemovedEvent]


def _split_duration(seconds):
    whole = int(seconds)
    return whole, int((seconds - whole) * 1e9)


def notification_message(event, xid) -> ofm.OfpMessage:
    """Build the Packet-In / Flow-Removed message for a dataplane notification"""
    if isinstance(event, PacketInEvent):
        return ofm.OFPPacketIn(
            xid=xid,
            buffer_id=event.buffer_id,
            total_len=len(event.frame.data),
            reason=event.reason,
            table_id=event.table_id,
            cookie=event.cookie,
            match=(MatchField('in_port', event.frame.ingress_port),),
            data=event.data,
        )
    removed = event.removed
    duration_sec, duration_nsec = _split_duration(removed.duration)
    return ofm.OFPFlowRemoved(
        xid=xid,
        cookie=removed.cookie,
        priority=removed.priority,
        reason=removed.reason,
        table_id=removed.table_id,
        duration_sec=duration_sec,
        duration_nsec=duration_nsec,
        idle_timeout=removed.idle_timeout,
        hard_timeout=removed.hard_timeout,
        packet_count=removed.packet_count,
        byte_count=removed.byte_count,
        match=removed.match_fields,
    )


def flow_mod_descriptor(msg: ofm.OFPFlowMod, port_count) -> FlowMod:
    """
    Convert a FlowMod message into the pipeline's FlowMod descriptor

    Raises:
        MessageError / FlowModError: duplicate instructions or bad output ports
    """
    goto_table = write_actions = None
    clear_actions = apply_actions = False
    seen = set()
    for instruction in msg.instructions:
        if instruction.kind in seen:
            raise FlowModError(ErrorType.BAD_INSTRUCTION, BadInstructionCode.DUP_INST,
                               f'duplicate {instruction.kind.name} instruction')
        seen.add(instruction.kind)
        if isinstance(instruction, GotoTable):
            goto_table = instruction.table_id
        elif isinstance(instruction, WriteActions):
            validate_actions(instruction.actions, port_count)
            write_actions = instruction.actions
        elif isinstance(instruction, ClearActions):
            clear_actions = True
        elif isinstance(instruction, ApplyActions):
            apply_actions = True

    return FlowMod(
        command=msg.command,
        table_id=msg.table_id,
        match=msg.match,
        priority=msg.priority,
        instructions=InstructionSet(goto_table, write_actions, clear_actions),
        cookie=msg.cookie,
        cookie_mask=msg.cookie_mask,
        idle_timeout=msg.idle_timeout,
        hard_timeout=msg.hard_timeout,
        flags=msg.flags,
        out_port=msg.out_port,
        buffer_id=msg.buffer_id,
        apply_actions=apply_actions,
    )


def wire_instructions(instructions: InstructionSet):
    """InstructionSet back to wire instructions (clear, write, goto)"""
    wire = []
    if instructions.clear_actions:
        wire.append(ClearActions())
    if instructions.write_actions is not None:
        wire.append(WriteActions(tuple(instructions.write_actions)))
    if instructions.goto_table is not None:
        wire.append(GotoTable(instructions.goto_table))
    return tuple(wire)


class OpenFlowChannel:
    """
    Per-connection channel state machine

    Args:
        switch: Datapath facade (see src.dataplane.switch.Switch)
        xids: XidSource shared with the dataplane
        echo_interval: Seconds between keep-alive EchoRequests (0 = off)
        echo_max_missed: Unanswered EchoRequests tolerated before closing
    """

    def __init__(self, switch, xids=None, echo_interval=5.0, echo_max_missed=3):
        self.switch = switch
        self.xids = xids or XidSource()
        self.echo_interval = echo_interval
        self.echo_max_missed = echo_max_missed
        self.state = ChannelState.FRESH
        self.version = None
        self.hello_sent = False
        self.echo_outstanding = 0
        self.last_echo = None

    def start(self):
        """Open the channel: the switch speaks first with Hello"""
        self.hello_sent = True
        self.state = ChannelState.HELLO_SENT
        return [ofm.OFPHello.with_versions(self.xids.next())]

    def step(self, event: ChannelEvent) -> list[ofm.OfpMessage]:
        """
        Advance the state machine by one event

        Returns:
            list: Outbound messages in send order
        """
        if self.state == ChannelState.CLOSED:
            return []
        if isinstance(event, Received):
            return self._on_message(event.msg)
        if isinstance(event, Malformed):
            log.warning(f'malformed message: {event.error}')
            return [ofm.OFPErrorMsg.from_error(event.error)]
        if isinstance(event, Timer):
            return self._on_timer(event.now)
        if isinstance(event, (PacketInEvent, FlowRemovedEvent)):
            return [notification_message(event, self.xids.next())]
        raise TypeError(f'unknown channel event {event!r}')

    def close(self):
        self.state = ChannelState.CLOSED

    # -- keep-alive ---------------------------------------------------------

    def _on_timer(self, now):
        if self.state != ChannelState.NEGOTIATED or not self.echo_interval:
            return []
        if self.last_echo is None:
            self.last_echo = now
            return []
        if now - self.last_echo < self.echo_interval:
            return []
        if self.echo_outstanding >= self.echo_max_missed:
            log.warning(f'{self.echo_outstanding} echo requests unanswered, closing channel')
            self.close()
            return []
        self.last_echo = now
        self.echo_outstanding += 1
        return [ofm.OFPEchoRequest(xid=self.xids.next())]

    # -- controller messages --------------------------------------------------

    def _on_message(self, msg):
        if isinstance(msg, ofm.OFPHello):
            return self._on_hello(msg)
        if self.state != ChannelState.NEGOTIATED:
            return [self._error(msg, ErrorType.BAD_REQUEST, BadRequestCode.EPERM)]
        try:
            return self._dispatch(msg)
        except OpenFlowError as e:
            e.xid = msg.xid
            e.data = ofm.encode(msg)[:64]
            log.warning(f'{type(msg).__name__} xid={msg.xid} rejected: {e}')
            return [ofm.OFPErrorMsg.from_error(e)]

    def _error(self, msg, error_type, code):
        return ofm.OFPErrorMsg(xid=msg.xid, error_type=error_type, code=code, data=ofm.encode(msg)[:64])

    def _on_hello(self, msg: ofm.OFPHello):
        outbound = []
        if not self.hello_sent:
            outbound.extend(self.start())
        if self.state == ChannelState.NEGOTIATED:
            return outbound
        offered = msg.versions
        if OFP_VERSION in offered or (not msg.elements and msg.hello_version >= OFP_VERSION):
            self.version = OFP_VERSION
            self.state = ChannelState.NEGOTIATED
            log.success(f'negotiated OpenFlow 1.3 (controller offered {sorted(offered)})')
            return outbound
        log.error(f'no common version with controller (offered {sorted(offered)})')
        outbound.append(ofm.OFPErrorMsg(xid=msg.xid, error_type=ErrorType.HELLO_FAILED,
                                        code=HelloFailedCode.INCOMPATIBLE,
                                        data=b'only OpenFlow 1.3 is supported'))
        self.close()
        return outbound

    def _dispatch(self, msg):
        handler = _HANDLERS.get(type(msg))
        if handler is None:
            return [self._error(msg, ErrorType.BAD_REQUEST, BadRequestCode.BAD_TYPE)]
        return handler(self, msg)

    def _on_echo_request(self, msg):
        return [ofm.OFPEchoReply(xid=msg.xid, data=msg.data)]

    def _on_echo_reply(self, msg):
        self.echo_outstanding = 0
        return []

    def _on_error(self, msg):
        log.warning(f'controller reported error type={msg.error_type} code={msg.code} xid={msg.xid}')
        return []

    def _on_features(self, msg):
        config = self.switch.config
        return [ofm.OFPFeaturesReply(
            xid=msg.xid,
            datapath_id=config.datapath_id,
            n_buffers=config.buffer_capacity,
            n_tables=config.table_count,
            capabilities=SWITCH_CAPABILITIES,
        )]

    def _on_get_config(self, msg):
        return [ofm.OFPGetConfigReply(xid=msg.xid, flags=self.switch.config_flags,
                                      miss_send_len=self.switch.miss_send_len)]

    def _on_set_config(self, msg):
        self.switch.config_flags = msg.flags
        self.switch.miss_send_len = msg.miss_send_len
        return []

    def _on_flow_mod(self, msg):
        mod = flow_mod_descriptor(msg, self.switch.config.port_count)
        removed = self.switch.apply_flow_mod(mod)
        return [notification_message(FlowRemovedEvent(r), self.xids.next()) for r in removed if r.notify]

    def _on_table_mod(self, msg):
        self.switch.pipeline.table_mod(msg.table_id, msg.config)
        return []

    def _on_packet_out(self, msg):
        validate_actions(msg.actions, self.switch.config.port_count, packet_out=True)
        self.switch.packet_out(msg.buffer_id, msg.in_port, msg.actions, msg.data)
        return []

    def _on_barrier(self, msg):
        return [ofm.OFPBarrierReply(xid=msg.xid)]

    def _on_multipart(self, msg):
        mp_type = msg.mp_type
        if mp_type == MultipartType.DESC:
            return [ofm.OFPMultipartReply(xid=msg.xid, mp_type=mp_type, body=DESCRIPTION)]
        if mp_type == MultipartType.FLOW:
            records = self._flow_stats(msg.body)
        elif mp_type == MultipartType.TABLE:
            records = [
                OFPTableStats(r.table_id, r.active_entries, r.lookup_count, r.matched_count)
                for r in self.switch.pipeline.collect_stats(StatsScope.TABLE)
            ]
        elif mp_type == MultipartType.PORT_STATS:
            records = self.switch.port_stats(msg.body.port_no)
        elif mp_type == MultipartType.QUEUE:
            records = self.switch.queue_stats(msg.body.port_no, msg.body.queue_id)
        elif mp_type == MultipartType.PORT_DESC:
            records = self.switch.port_descriptions()
        else:
            return [self._error(msg, ErrorType.BAD_REQUEST, BadRequestCode.BAD_MULTIPART)]
        return ofm.split_multipart_reply(msg.xid, mp_type, records)

    def _flow_stats(self, request):
        pipeline = self.switch.pipeline
        if request.table_id != OFPTT_ALL and request.table_id >= len(pipeline):
            raise MessageError(ErrorType.BAD_REQUEST, BadRequestCode.BAD_TABLE_ID,
                               f'no table {request.table_id}')
        records = pipeline.collect_stats(
            StatsScope.FLOW,
            table_id=request.table_id,
            match=request.match,
            out_port=request.out_port,
            cookie=request.cookie,
            cookie_mask=request.cookie_mask,
        )
        stats = []
        for record in records:
            duration_sec, duration_nsec = _split_duration(record.duration)
            stats.append(OFPFlowStats(
                table_id=record.table_id,
                duration_sec=duration_sec,
                duration_nsec=duration_nsec,
                priority=record.priority,
                idle_timeout=record.idle_timeout,
                hard_timeout=record.hard_timeout,
                flags=record.flags,
                cookie=record.cookie,
                packet_count=record.packet_count,
                byte_count=record.byte_count,
                match=record.match_fields,
                instructions=wire_instructions(record.instructions),
            ))
        return stats


_HANDLERS = {
    ofm.OFPEchoRequest: OpenFlowChannel._on_echo_request,
    ofm.OFPEchoReply: OpenFlowChannel._on_echo_reply,
    ofm.OFPErrorMsg: OpenFlowChannel._on_error,
    ofm.OFPFeaturesRequest: OpenFlowChannel._on_features,
    ofm.OFPGetConfigRequest: OpenFlowChannel._on_get_config,
    ofm.OFPSetConfig: OpenFlowChannel._on_set_config,
    ofm.OFPFlowMod: OpenFlowChannel._on_flow_mod,
    ofm.OFPTableMod: OpenFlowChannel._on_table_mod,
    ofm.OFPPacketOut: OpenFlowChannel._on_packet_out,
    ofm.OFPBarrierRequest: OpenFlowChannel._on_barrier,
    ofm.OFPMultipartRequest: OpenFlowChannel._on_multipart,
}


__all__ = [
    'ChannelState', 'OpenFlowChannel', 'XidSource', 'Received', 'Malformed', 'Timer',
    'PacketInEvent', 'FlowRemovedEvent', 'notification_message', 'flow_mod_descriptor',
    'wire_instructions', 'DESCRIPTION',
]
