"""
Codec for the variable structures embedded in OpenFlow messages:
OXM match, actions, instructions and multipart records
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import ClassVar, Optional

from src.models.actions import SETTABLE_FIELDS, Action, ActionType
from src.models.errors import MessageError
from src.models.flow import MatchField
from src.openflow.constants import (
    OFPG_ANY,
    OFPMT_OXM,
    OFPP_ANY,
    OFPQ_ALL,
    OFPTT_ALL,
    OFPXMC_OPENFLOW_BASIC,
    OXM_CODES,
    OXM_FIELDS,
    BadActionCode,
    BadInstructionCode,
    BadMatchCode,
    BadRequestCode,
    ErrorType,
    InstructionType,
)


def pad_len(length, align=8):
    return (length + align - 1) // align * align


def _need(buf, offset, size, error):
    if offset + size > len(buf):
        raise error


def _bad_len(error_type, code, what):
    return MessageError(error_type, code, f'{what} runs past its enclosing structure')


# ---------------------------------------------------------------------------
# OXM match

OFP_MATCH_HEADER = struct.Struct('!HH')
OXM_HEADER = struct.Struct('!HBB')


def encode_oxm(match_field: MatchField):
    if match_field.name not in OXM_CODES:
        raise MessageError(ErrorType.BAD_MATCH, BadMatchCode.BAD_FIELD,
                           f'no OXM code for {match_field.name}')
    code, size = OXM_CODES[match_field.name]
    has_mask = match_field.mask is not None
    payload = match_field.value.to_bytes(size, 'big')
    if has_mask:
        payload += match_field.mask.to_bytes(size, 'big')
    return OXM_HEADER.pack(OFPXMC_OPENFLOW_BASIC, (code << 1) | has_mask, len(payload)) + payload


def decode_oxm(buf, offset):
    """
    Decode one OXM TLV

    Returns:
        tuple: (MatchField, next offset)
    """
    _need(buf, offset, OXM_HEADER.size, _bad_len(ErrorType.BAD_MATCH, BadMatchCode.BAD_LEN, 'OXM header'))
    oxm_class, field_and_mask, length = OXM_HEADER.unpack_from(buf, offset)
    offset += OXM_HEADER.size
    code, has_mask = field_and_mask >> 1, field_and_mask & 1
    if oxm_class != OFPXMC_OPENFLOW_BASIC or code not in OXM_FIELDS:
        raise MessageError(ErrorType.BAD_MATCH, BadMatchCode.BAD_FIELD,
                           f'unsupported OXM class {oxm_class:#x} field {code}')
    name, size = OXM_FIELDS[code]
    if length != size * (1 + has_mask):
        raise MessageError(ErrorType.BAD_MATCH, BadMatchCode.BAD_LEN, f'OXM {name} has length {length}')
    _need(buf, offset, length, _bad_len(ErrorType.BAD_MATCH, BadMatchCode.BAD_LEN, f'OXM {name}'))
    value = int.from_bytes(buf[offset:offset + size], 'big')
    mask = int.from_bytes(buf[offset + size:offset + length], 'big') if has_mask else None
    return MatchField(name, value, mask), offset + length


def encode_match(fields):
    """ofp_match (OXM type), padded to a multiple of 8"""
    body = b''.join(encode_oxm(f) for f in fields)
    length = OFP_MATCH_HEADER.size + len(body)
    return OFP_MATCH_HEADER.pack(OFPMT_OXM, length) + body + bytes(pad_len(length) - length)


def decode_match(buf, offset):
    """
    Decode an ofp_match

    Returns:
        tuple: (tuple of MatchField, offset past the padded match)
    """
    _need(buf, offset, OFP_MATCH_HEADER.size, _bad_len(ErrorType.BAD_MATCH, BadMatchCode.BAD_LEN, 'match'))
    match_type, length = OFP_MATCH_HEADER.unpack_from(buf, offset)
    if match_type != OFPMT_OXM:
        raise MessageError(ErrorType.BAD_MATCH, BadMatchCode.BAD_TYPE, f'match type {match_type}')
    if length < OFP_MATCH_HEADER.size:
        raise MessageError(ErrorType.BAD_MATCH, BadMatchCode.BAD_LEN, f'match length {length}')
    end = offset + length
    _need(buf, offset, pad_len(length), _bad_len(ErrorType.BAD_MATCH, BadMatchCode.BAD_LEN, 'match'))

    fields = []
    cursor = offset + OFP_MATCH_HEADER.size
    while cursor < end:
        match_field, cursor = decode_oxm(buf[:end], cursor)
        fields.append(match_field)
    return tuple(fields), offset + pad_len(length)


# ---------------------------------------------------------------------------
# Actions

ACTION_HEADER = struct.Struct('!HH')
_ACTION_OUTPUT = struct.Struct('!HHIH6x')
_ACTION_TTL = struct.Struct('!HHB3x')
_ACTION_ETHERTYPE = struct.Struct('!HHH2x')
_ACTION_BARE = struct.Struct('!HH4x')

_ETHERTYPE_ACTIONS = {ActionType.PUSH_VLAN, ActionType.PUSH_MPLS, ActionType.POP_MPLS}
_TTL_ACTIONS = {ActionType.SET_NW_TTL, ActionType.SET_MPLS_TTL}
_BARE_ACTIONS = {ActionType.POP_VLAN, ActionType.DEC_NW_TTL, ActionType.DEC_MPLS_TTL}


def encode_action(action: Action):
    kind = ActionType(action.kind)
    if kind == ActionType.OUTPUT:
        return _ACTION_OUTPUT.pack(kind, _ACTION_OUTPUT.size, action.port, action.max_len)
    if kind in _ETHERTYPE_ACTIONS:
        return _ACTION_ETHERTYPE.pack(kind, _ACTION_ETHERTYPE.size, action.ethertype)
    if kind in _TTL_ACTIONS:
        return _ACTION_TTL.pack(kind, _ACTION_TTL.size, action.ttl)
    if kind in _BARE_ACTIONS:
        return _ACTION_BARE.pack(kind, _ACTION_BARE.size)
    oxm = encode_oxm(MatchField(action.field, action.value))
    length = pad_len(ACTION_HEADER.size + len(oxm))
    return ACTION_HEADER.pack(kind, length) + oxm + bytes(length - ACTION_HEADER.size - len(oxm))


def _decode_action(buf, offset, kind, length):
    if kind == ActionType.OUTPUT:
        _, _, port, max_len = _ACTION_OUTPUT.unpack_from(buf, offset)
        return Action.output(port, max_len)
    if kind == ActionType.PUSH_VLAN:
        return Action.push_vlan(_ACTION_ETHERTYPE.unpack_from(buf, offset)[2])
    if kind == ActionType.PUSH_MPLS:
        return Action.push_mpls(_ACTION_ETHERTYPE.unpack_from(buf, offset)[2])
    if kind == ActionType.POP_MPLS:
        return Action.pop_mpls(_ACTION_ETHERTYPE.unpack_from(buf, offset)[2])
    if kind == ActionType.POP_VLAN:
        return Action.pop_vlan()
    if kind == ActionType.SET_NW_TTL:
        return Action.set_ttl(_ACTION_TTL.unpack_from(buf, offset)[2])
    if kind == ActionType.SET_MPLS_TTL:
        return Action.set_mpls_ttl(_ACTION_TTL.unpack_from(buf, offset)[2])
    if kind == ActionType.DEC_NW_TTL:
        return Action.dec_ttl()
    if kind == ActionType.DEC_MPLS_TTL:
        return Action.dec_mpls_ttl()

    try:
        match_field, _ = decode_oxm(buf[:offset + length], offset + ACTION_HEADER.size)
    except MessageError as e:
        raise MessageError(ErrorType.BAD_ACTION, BadActionCode.BAD_SET_TYPE, str(e)) from e
    if match_field.mask is not None or match_field.name not in SETTABLE_FIELDS:
        raise MessageError(ErrorType.BAD_ACTION, BadActionCode.BAD_SET_TYPE,
                           f'set-field on {match_field.name} is not supported')
    return Action.set_field(match_field.name, match_field.value)


_ACTION_SIZES = {
    ActionType.OUTPUT: _ACTION_OUTPUT.size,
    **{kind: _ACTION_ETHERTYPE.size for kind in _ETHERTYPE_ACTIONS},
    **{kind: _ACTION_TTL.size for kind in _TTL_ACTIONS},
    **{kind: _ACTION_BARE.size for kind in _BARE_ACTIONS},
}


def encode_actions(actions):
    return b''.join(encode_action(a) for a in actions)


def decode_actions(buf, offset, end):
    """
    Decode an action list occupying buf[offset:end]

    Raises:
        MessageError: OFPET_BAD_ACTION for unknown types or bad lengths
    """
    actions = []
    while offset < end:
        if offset + ACTION_HEADER.size > end:
            raise MessageError(ErrorType.BAD_ACTION, BadActionCode.BAD_LEN, 'truncated action header')
        kind, length = ACTION_HEADER.unpack_from(buf, offset)
        if length < 8 or length % 8 or offset + length > end:
            raise MessageError(ErrorType.BAD_ACTION, BadActionCode.BAD_LEN, f'action length {length}')
        try:
            kind = ActionType(kind)
        except ValueError:
            raise MessageError(ErrorType.BAD_ACTION, BadActionCode.BAD_TYPE, f'unsupported action type {kind}') from None
        if kind in _ACTION_SIZES and length != _ACTION_SIZES[kind]:
            raise MessageError(ErrorType.BAD_ACTION, BadActionCode.BAD_LEN, f'{kind.name} length {length}')
        actions.append(_decode_action(buf, offset, kind, length))
        offset += length
    return tuple(actions)


# ---------------------------------------------------------------------------
# Instructions

INSTRUCTION_HEADER = struct.Struct('!HH')
_INSTRUCTION_GOTO = struct.Struct('!HHB3x')
_INSTRUCTION_ACTIONS = struct.Struct('!HH4x')


@dataclass(frozen=True)
class GotoTable:
    table_id: int
    kind: ClassVar[InstructionType] = InstructionType.GOTO_TABLE


@dataclass(frozen=True)
class WriteActions:
    actions: tuple[Action, ...] = ()
    kind: ClassVar[InstructionType] = InstructionType.WRITE_ACTIONS


@dataclass(frozen=True)
class ApplyActions:
    actions: tuple[Action, ...] = ()
    kind: ClassVar[InstructionType] = InstructionType.APPLY_ACTIONS


@dataclass(frozen=True)
class ClearActions:
    kind: ClassVar[InstructionType] = InstructionType.CLEAR_ACTIONS


def encode_instruction(instruction):
    if isinstance(instruction, GotoTable):
        return _INSTRUCTION_GOTO.pack(instruction.kind, _INSTRUCTION_GOTO.size, instruction.table_id)
    if isinstance(instruction, ClearActions):
        return _INSTRUCTION_ACTIONS.pack(instruction.kind, _INSTRUCTION_ACTIONS.size)
    actions = encode_actions(instruction.actions)
    return _INSTRUCTION_ACTIONS.pack(instruction.kind, _INSTRUCTION_ACTIONS.size + len(actions)) + actions


def encode_instructions(instructions):
    return b''.join(encode_instruction(i) for i in instructions)


def decode_instructions(buf, offset, end):
    instructions = []
    while offset < end:
        if offset + INSTRUCTION_HEADER.size > end:
            raise MessageError(ErrorType.BAD_INSTRUCTION, BadInstructionCode.BAD_LEN, 'truncated instruction header')
        kind, length = INSTRUCTION_HEADER.unpack_from(buf, offset)
        if length < 8 or length % 8 or offset + length > end:
            raise MessageError(ErrorType.BAD_INSTRUCTION, BadInstructionCode.BAD_LEN, f'instruction length {length}')
        if kind == InstructionType.GOTO_TABLE and length == _INSTRUCTION_GOTO.size:
            instructions.append(GotoTable(_INSTRUCTION_GOTO.unpack_from(buf, offset)[2]))
        elif kind == InstructionType.CLEAR_ACTIONS and length == _INSTRUCTION_ACTIONS.size:
            instructions.append(ClearActions())
        elif kind == InstructionType.WRITE_ACTIONS:
            instructions.append(WriteActions(decode_actions(buf, offset + _INSTRUCTION_ACTIONS.size, offset + length)))
        elif kind == InstructionType.APPLY_ACTIONS:
            instructions.append(ApplyActions(decode_actions(buf, offset + _INSTRUCTION_ACTIONS.size, offset + length)))
        elif kind in (InstructionType.GOTO_TABLE, InstructionType.CLEAR_ACTIONS):
            raise MessageError(ErrorType.BAD_INSTRUCTION, BadInstructionCode.BAD_LEN, f'instruction length {length}')
        else:
            raise MessageError(ErrorType.BAD_INSTRUCTION, BadInstructionCode.UNKNOWN_INST,
                               f'unsupported instruction type {kind}')
        offset += length
    return tuple(instructions)


# ---------------------------------------------------------------------------
# Multipart bodies

def _text(raw):
    return raw.rstrip(b'\x00').decode('ascii', errors='replace')


def _raw(text, size):
    return text.encode('ascii', errors='replace')[:size].ljust(size, b'\x00')


@dataclass(frozen=True)
class OFPDescStats:
    mfr_desc: str = ''
    hw_desc: str = ''
    sw_desc: str = ''
    serial_num: str = ''
    dp_desc: str = ''

    _struct: ClassVar = struct.Struct('!256s256s256s32s256s')

    def encode(self):
        return self._struct.pack(_raw(self.mfr_desc, 256), _raw(self.hw_desc, 256), _raw(self.sw_desc, 256),
                                 _raw(self.serial_num, 32), _raw(self.dp_desc, 256))

    @classmethod
    def decode_all(cls, buf):
        if len(buf) != cls._struct.size:
            raise MessageError(ErrorType.BAD_REQUEST, BadRequestCode.BAD_LEN, 'desc body has the wrong size')
        return cls(*(_text(v) for v in cls._struct.unpack_from(buf)))


@dataclass(frozen=True)
class OFPFlowStatsRequest:
    table_id: int = OFPTT_ALL
    out_port: int = OFPP_ANY
    out_group: int = OFPG_ANY
    cookie: int = 0
    cookie_mask: int = 0
    match: tuple[MatchField, ...] = ()

    _struct: ClassVar = struct.Struct('!B3xII4xQQ')

    def encode(self):
        return self._struct.pack(self.table_id, self.out_port, self.out_group, self.cookie,
                                 self.cookie_mask) + encode_match(self.match)

    @classmethod
    def decode_all(cls, buf):
        table_id, out_port, out_group, cookie, cookie_mask = cls._struct.unpack_from(buf)
        match, end = decode_match(buf, cls._struct.size)
        if end != len(buf):
            raise MessageError(ErrorType.BAD_REQUEST, BadRequestCode.BAD_LEN, 'trailing bytes after flow-stats match')
        return cls(table_id, out_port, out_group, cookie, cookie_mask, match)


@dataclass(frozen=True)
class OFPFlowStats:
    table_id: int = 0
    duration_sec: int = 0
    duration_nsec: int = 0
    priority: int = 0
    idle_timeout: int = 0
    hard_timeout: int = 0
    flags: int = 0
    cookie: int = 0
    packet_count: int = 0
    byte_count: int = 0
    match: tuple[MatchField, ...] = ()
    instructions: tuple = ()

    _struct: ClassVar = struct.Struct('!HBxIIHHHH4xQQQ')

    def encode(self):
        tail = encode_match(self.match) + encode_instructions(self.instructions)
        return self._struct.pack(
            self._struct.size + len(tail), self.table_id, self.duration_sec, self.duration_nsec,
            self.priority, self.idle_timeout, self.hard_timeout, self.flags, self.cookie,
            self.packet_count, self.byte_count) + tail

    @classmethod
    def decode_all(cls, buf):
        records = []
        offset = 0
        while offset < len(buf):
            (length, table_id, duration_sec, duration_nsec, priority, idle, hard, flags,
             cookie, packets, octets) = cls._struct.unpack_from(buf, offset)
            end = offset + length
            if length < cls._struct.size or end > len(buf):
                raise MessageError(ErrorType.BAD_REQUEST, BadRequestCode.BAD_LEN, f'flow-stats length {length}')
            match, cursor = decode_match(buf[:end], offset + cls._struct.size)
            instructions = decode_instructions(buf, cursor, end)
            records.append(cls(table_id, duration_sec, duration_nsec, priority, idle, hard, flags,
                               cookie, packets, octets, match, instructions))
            offset = end
        return tuple(records)


def _fixed_records(cls, buf):
    size = cls._struct.size
    if len(buf) % size:
        raise MessageError(ErrorType.BAD_REQUEST, BadRequestCode.BAD_LEN,
                           f'{cls.__name__} body is not a multiple of {size}')
    return tuple(cls(*cls._struct.unpack_from(buf, i)) for i in range(0, len(buf), size))


@dataclass(frozen=True)
class OFPTableStats:
    table_id: int = 0
    active_count: int = 0
    lookup_count: int = 0
    matched_count: int = 0

    _struct: ClassVar = struct.Struct('!B3xIQQ')

    def encode(self):
        return self._struct.pack(self.table_id, self.active_count, self.lookup_count, self.matched_count)

    @classmethod
    def decode_all(cls, buf):
        return _fixed_records(cls, buf)


@dataclass(frozen=True)
class OFPPortStatsRequest:
    port_no: int = OFPP_ANY

    _struct: ClassVar = struct.Struct('!I4x')

    def encode(self):
        return self._struct.pack(self.port_no)

    @classmethod
    def decode_all(cls, buf):
        if len(buf) != cls._struct.size:
            raise MessageError(ErrorType.BAD_REQUEST, BadRequestCode.BAD_LEN, 'port-stats request size')
        return cls(*cls._struct.unpack_from(buf))


@dataclass(frozen=True)
class OFPPortStats:
    port_no: int = 0
    rx_packets: int = 0
    tx_packets: int = 0
    rx_bytes: int = 0
    tx_bytes: int = 0
    rx_dropped: int = 0
    tx_dropped: int = 0
    rx_errors: int = 0
    tx_errors: int = 0
    rx_frame_err: int = 0
    rx_over_err: int = 0
    rx_crc_err: int = 0
    collisions: int = 0
    duration_sec: int = 0
    duration_nsec: int = 0

    _struct: ClassVar = struct.Struct('!I4x12QII')

    def encode(self):
        return self._struct.pack(
            self.port_no, self.rx_packets, self.tx_packets, self.rx_bytes, self.tx_bytes,
            self.rx_dropped, self.tx_dropped, self.rx_errors, self.tx_errors, self.rx_frame_err,
            self.rx_over_err, self.rx_crc_err, self.collisions, self.duration_sec, self.duration_nsec)

    @classmethod
    def decode_all(cls, buf):
        return _fixed_records(cls, buf)


@dataclass(frozen=True)
class OFPQueueStatsRequest:
    port_no: int = OFPP_ANY
    queue_id: int = OFPQ_ALL

    _struct: ClassVar = struct.Struct('!II')

    def encode(self):
        return self._struct.pack(self.port_no, self.queue_id)

    @classmethod
    def decode_all(cls, buf):
        if len(buf) != cls._struct.size:
            raise MessageError(ErrorType.BAD_REQUEST, BadRequestCode.BAD_LEN, 'queue-stats request size')
        return cls(*cls._struct.unpack_from(buf))


@dataclass(frozen=True)
class OFPQueueStats:
    port_no: int = 0
    queue_id: int = 0
    tx_bytes: int = 0
    tx_packets: int = 0
    tx_errors: int = 0
    duration_sec: int = 0
    duration_nsec: int = 0

    _struct: ClassVar = struct.Struct('!IIQQQII')

    def encode(self):
        return self._struct.pack(self.port_no, self.queue_id, self.tx_bytes, self.tx_packets,
                                 self.tx_errors, self.duration_sec, self.duration_nsec)

    @classmethod
    def decode_all(cls, buf):
        return _fixed_records(cls, buf)


@dataclass(frozen=True)
class OFPPort:
    port_no: int = 0
    hw_addr: int = 0
    name: str = ''
    config: int = 0
    state: int = 0
    curr: int = 0
    advertised: int = 0
    supported: int = 0
    peer: int = 0
    curr_speed: int = 0
    max_speed: int = 0

    _struct: ClassVar = struct.Struct('!I4x6s2x16sIIIIIIII')

    def encode(self):
        return self._struct.pack(
            self.port_no, self.hw_addr.to_bytes(6, 'big'), _raw(self.name, 16), self.config, self.state,
            self.curr, self.advertised, self.supported, self.peer, self.curr_speed, self.max_speed)

    @classmethod
    def decode_all(cls, buf):
        size = cls._struct.size
        if len(buf) % size:
            raise MessageError(ErrorType.BAD_REQUEST, BadRequestCode.BAD_LEN, 'port-desc body size')
        ports = []
        for i in range(0, len(buf), size):
            port_no, hw_addr, name, *rest = cls._struct.unpack_from(buf, i)
            ports.append(cls(port_no, int.from_bytes(hw_addr, 'big'), _text(name), *rest))
        return tuple(ports)


@dataclass(frozen=True)
class RawBody:
    """Multipart body of a type this switch does not model"""

    data: bytes = field(default=b'')

    def encode(self):
        return self.data
