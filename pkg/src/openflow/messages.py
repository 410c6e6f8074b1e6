"""
OpenFlow 1.3 messages and their wire codec

Each message class registers itself for its OFPT_* type. Variable trailing
data is zero-padded at construction so that every encoded message is a
multiple of 8 bytes and decode(encode(m)) == m holds exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import ClassVar, Union

from src.models.actions import Action
from src.models.errors import EncodingError, FramingError, MessageError, OpenFlowError
from src.models.flow import MatchField
from src.openflow.constants import (
    OFP_HEADER_LEN,
    OFP_MAX_MESSAGE_LEN,
    OFP_NO_BUFFER,
    OFP_VERSION,
    OFPG_ANY,
    OFPHET_VERSIONBITMAP,
    OFPMPF_REPLY_MORE,
    OFPP_ANY,
    OFPP_CONTROLLER,
    BadRequestCode,
    ErrorType,
    MsgType,
    MultipartType,
    PacketInReason,
)
from src.openflow.structs import (
    OFPDescStats,
    OFPFlowStats,
    OFPFlowStatsRequest,
    OFPPort,
    OFPPortStats,
    OFPPortStatsRequest,
    OFPQueueStats,
    OFPQueueStatsRequest,
    OFPTableStats,
    RawBody,
    decode_actions,
    decode_instructions,
    decode_match,
    encode_actions,
    encode_instructions,
    encode_match,
    pad_len,
)

OFP_HEADER = struct.Struct('!BBHI')

_MSG_PARSERS = {}


def _set_msg_type(msg_type):
    def _set_cls_msg_type(cls):
        cls.msg_type = msg_type
        return cls
    return _set_cls_msg_type


def _register_parser(cls):
    assert cls.msg_type is not None
    assert cls.msg_type not in _MSG_PARSERS
    _MSG_PARSERS[cls.msg_type] = cls
    return cls


def _padded(data, modulus, residue=0):
    """Zero-pad data until len(data) % modulus == residue"""
    data = bytes(data)
    return data + bytes((residue - len(data)) % modulus)


@dataclass(frozen=True)
class OfpMessage:
    """Base class; subclasses implement _encode_body / _decode_body"""

    xid: int = 0
    msg_type: ClassVar[MsgType] = None

    def _encode_body(self):
        return b''

    @classmethod
    def _decode_body(cls, xid, body):
        if body:
            raise MessageError(ErrorType.BAD_REQUEST, BadRequestCode.BAD_LEN,
                               f'{cls.__name__} carries an unexpected body')
        return cls(xid=xid)

    @property
    def version(self):
        return OFP_VERSION


@_register_parser
@_set_msg_type(MsgType.HELLO)
@dataclass(frozen=True)
class OFPHello(OfpMessage):
    """
    Hello; elements hold the raw hello elements (8-byte aligned).
    hello_version is the version byte of the header (negotiation input).
    """

    elements: bytes = b''
    hello_version: int = OFP_VERSION

    def __post_init__(self):
        object.__setattr__(self, 'elements', _padded(self.elements, 8))

    @classmethod
    def with_versions(cls, xid=0, versions=(OFP_VERSION,)):
        bitmap = 0
        for v in versions:
            bitmap |= 1 << v
        element = struct.pack('!HHI', OFPHET_VERSIONBITMAP, 8, bitmap)
        return cls(xid=xid, elements=element, hello_version=max(versions))

    @property
    def version(self):
        return self.hello_version

    @property
    def versions(self):
        """Versions advertised by a version bitmap element, else {hello_version}"""
        offset = 0
        while offset + 4 <= len(self.elements):
            kind, length = struct.unpack_from('!HH', self.elements, offset)
            if length < 4:
                break
            if kind == OFPHET_VERSIONBITMAP:
                bitmaps = self.elements[offset + 4:offset + length]
                found = set()
                for index in range(len(bitmaps) // 4):
                    (word,) = struct.unpack_from('!I', bitmaps, index * 4)
                    found.update(index * 32 + bit for bit in range(32) if word >> bit & 1)
                return found
            offset += pad_len(length)
        return {self.hello_version}

    def _encode_body(self):
        return self.elements

    @classmethod
    def _decode_body(cls, xid, body):
        return cls(xid=xid, elements=body)


@_register_parser
@_set_msg_type(MsgType.ERROR)
@dataclass(frozen=True)
class OFPErrorMsg(OfpMessage):
    error_type: int = 0
    code: int = 0
    data: bytes = b''

    _struct: ClassVar = struct.Struct('!HH')

    def __post_init__(self):
        object.__setattr__(self, 'data', _padded(self.data, 8, 4))

    @classmethod
    def from_error(cls, error: OpenFlowError):
        return cls(xid=error.xid, error_type=error.error_type, code=error.code, data=error.data[:64])

    def _encode_body(self):
        return self._struct.pack(self.error_type, self.code) + self.data

    @classmethod
    def _decode_body(cls, xid, body):
        error_type, code = cls._struct.unpack_from(body)
        return cls(xid=xid, error_type=error_type, code=code, data=body[cls._struct.size:])


@dataclass(frozen=True)
class _EchoBase(OfpMessage):
    data: bytes = b''

    def __post_init__(self):
        object.__setattr__(self, 'data', _padded(self.data, 8))

    def _encode_body(self):
        return self.data

    @classmethod
    def _decode_body(cls, xid, body):
        return cls(xid=xid, data=body)


@_register_parser
@_set_msg_type(MsgType.ECHO_REQUEST)
@dataclass(frozen=True)
class OFPEchoRequest(_EchoBase):
    pass


@_register_parser
@_set_msg_type(MsgType.ECHO_REPLY)
@dataclass(frozen=True)
class OFPEchoReply(_EchoBase):
    pass


@_register_parser
@_set_msg_type(MsgType.FEATURES_REQUEST)
@dataclass(frozen=True)
class OFPFeaturesRequest(OfpMessage):
    pass


@_register_parser
@_set_msg_type(MsgType.FEATURES_REPLY)
@dataclass(frozen=True)
class OFPFeaturesReply(OfpMessage):
    datapath_id: int = 0
    n_buffers: int = 0
    n_tables: int = 0
    auxiliary_id: int = 0
    capabilities: int = 0
    reserved: int = 0

    _struct: ClassVar = struct.Struct('!QIBB2xII')

    def _encode_body(self):
        return self._struct.pack(self.datapath_id, self.n_buffers, self.n_tables,
                                 self.auxiliary_id, self.capabilities, self.reserved)

    @classmethod
    def _decode_body(cls, xid, body):
        return cls(xid, *cls._struct.unpack_from(body))


@_register_parser
@_set_msg_type(MsgType.GET_CONFIG_REQUEST)
@dataclass(frozen=True)
class OFPGetConfigRequest(OfpMessage):
    pass


@dataclass(frozen=True)
class _SwitchConfigBase(OfpMessage):
    """flags + miss_send_len; emitted padded to 16 bytes, accepted at 12 or 16"""

    flags: int = 0
    miss_send_len: int = 128

    _struct: ClassVar = struct.Struct('!HH4x')

    def _encode_body(self):
        return self._struct.pack(self.flags, self.miss_send_len)

    @classmethod
    def _decode_body(cls, xid, body):
        if len(body) not in (4, 8):
            raise MessageError(ErrorType.BAD_REQUEST, BadRequestCode.BAD_LEN, 'switch config has the wrong size')
        flags, miss_send_len = struct.unpack_from('!HH', body)
        return cls(xid=xid, flags=flags, miss_send_len=miss_send_len)


@_register_parser
@_set_msg_type(MsgType.GET_CONFIG_REPLY)
@dataclass(frozen=True)
class OFPGetConfigReply(_SwitchConfigBase):
    pass


@_register_parser
@_set_msg_type(MsgType.SET_CONFIG)
@dataclass(frozen=True)
class OFPSetConfig(_SwitchConfigBase):
    pass


@_register_parser
@_set_msg_type(MsgType.PACKET_IN)
@dataclass(frozen=True)
class OFPPacketIn(OfpMessage):
    buffer_id: int = OFP_NO_BUFFER
    total_len: int = 0
    reason: int = PacketInReason.NO_MATCH
    table_id: int = 0
    cookie: int = 0
    match: tuple[MatchField, ...] = ()
    data: bytes = b''

    _struct: ClassVar = struct.Struct('!IHBBQ')

    def __post_init__(self):
        # header + prelude + padded match + 2 pad bytes + data must stay 8-aligned
        object.__setattr__(self, 'match', tuple(self.match))
        object.__setattr__(self, 'data', _padded(self.data, 8, 6))

    def _encode_body(self):
        return (self._struct.pack(self.buffer_id, self.total_len, self.reason, self.table_id, self.cookie)
                + encode_match(self.match) + b'\x00\x00' + self.data)

    @classmethod
    def _decode_body(cls, xid, body):
        buffer_id, total_len, reason, table_id, cookie = cls._struct.unpack_from(body)
        match, offset = decode_match(body, cls._struct.size)
        return cls(xid, buffer_id, total_len, reason, table_id, cookie, match, body[offset + 2:])


@_register_parser
@_set_msg_type(MsgType.FLOW_REMOVED)
@dataclass(frozen=True)
class OFPFlowRemoved(OfpMessage):
    cookie: int = 0
    priority: int = 0
    reason: int = 0
    table_id: int = 0
    duration_sec: int = 0
    duration_nsec: int = 0
    idle_timeout: int = 0
    hard_timeout: int = 0
    packet_count: int = 0
    byte_count: int = 0
    match: tuple[MatchField, ...] = ()

    _struct: ClassVar = struct.Struct('!QHBBIIHHQQ')

    def __post_init__(self):
        object.__setattr__(self, 'match', tuple(self.match))

    def _encode_body(self):
        return self._struct.pack(
            self.cookie, self.priority, self.reason, self.table_id, self.duration_sec,
            self.duration_nsec, self.idle_timeout, self.hard_timeout, self.packet_count,
            self.byte_count) + encode_match(self.match)

    @classmethod
    def _decode_body(cls, xid, body):
        fixed = cls._struct.unpack_from(body)
        match, offset = decode_match(body, cls._struct.size)
        if offset != len(body):
            raise MessageError(ErrorType.BAD_REQUEST, BadRequestCode.BAD_LEN, 'trailing bytes after match')
        return cls(xid, *fixed, match)


@_register_parser
@_set_msg_type(MsgType.PACKET_OUT)
@dataclass(frozen=True)
class OFPPacketOut(OfpMessage):
    buffer_id: int = OFP_NO_BUFFER
    in_port: int = OFPP_CONTROLLER
    actions: tuple[Action, ...] = ()
    data: bytes = b''

    _struct: ClassVar = struct.Struct('!IIH6x')

    def __post_init__(self):
        object.__setattr__(self, 'actions', tuple(self.actions))
        object.__setattr__(self, 'data', _padded(self.data, 8))

    def _encode_body(self):
        actions = encode_actions(self.actions)
        return self._struct.pack(self.buffer_id, self.in_port, len(actions)) + actions + self.data

    @classmethod
    def _decode_body(cls, xid, body):
        buffer_id, in_port, actions_len = cls._struct.unpack_from(body)
        end = cls._struct.size + actions_len
        if end > len(body):
            raise MessageError(ErrorType.BAD_REQUEST, BadRequestCode.BAD_LEN, 'actions_len past message end')
        actions = decode_actions(body, cls._struct.size, end)
        return cls(xid, buffer_id, in_port, actions, body[end:])


@_register_parser
@_set_msg_type(MsgType.FLOW_MOD)
@dataclass(frozen=True)
class OFPFlowMod(OfpMessage):
    cookie: int = 0
    cookie_mask: int = 0
    table_id: int = 0
    command: int = 0
    idle_timeout: int = 0
    hard_timeout: int = 0
    priority: int = 0x8000
    buffer_id: int = OFP_NO_BUFFER
    out_port: int = OFPP_ANY
    out_group: int = OFPG_ANY
    flags: int = 0
    match: tuple[MatchField, ...] = ()
    instructions: tuple = ()

    _struct: ClassVar = struct.Struct('!QQBBHHHIIIH2x')

    def __post_init__(self):
        object.__setattr__(self, 'match', tuple(self.match))
        object.__setattr__(self, 'instructions', tuple(self.instructions))

    def _encode_body(self):
        return (self._struct.pack(
            self.cookie, self.cookie_mask, self.table_id, self.command, self.idle_timeout,
            self.hard_timeout, self.priority, self.buffer_id, self.out_port, self.out_group, self.flags)
            + encode_match(self.match) + encode_instructions(self.instructions))

    @classmethod
    def _decode_body(cls, xid, body):
        fixed = cls._struct.unpack_from(body)
        match, offset = decode_match(body, cls._struct.size)
        instructions = decode_instructions(body, offset, len(body))
        return cls(xid, *fixed, match, instructions)


@_register_parser
@_set_msg_type(MsgType.TABLE_MOD)
@dataclass(frozen=True)
class OFPTableMod(OfpMessage):
    table_id: int = 0
    config: int = 0

    _struct: ClassVar = struct.Struct('!B3xI')

    def _encode_body(self):
        return self._struct.pack(self.table_id, self.config)

    @classmethod
    def _decode_body(cls, xid, body):
        return cls(xid, *cls._struct.unpack_from(body))


# Multipart body codecs: type -> (request decoder, reply decoder)
_EMPTY = None
_MULTIPART_REQUESTS = {
    MultipartType.DESC: _EMPTY,
    MultipartType.FLOW: OFPFlowStatsRequest.decode_all,
    MultipartType.TABLE: _EMPTY,
    MultipartType.PORT_STATS: OFPPortStatsRequest.decode_all,
    MultipartType.QUEUE: OFPQueueStatsRequest.decode_all,
    MultipartType.PORT_DESC: _EMPTY,
}
_MULTIPART_REPLIES = {
    MultipartType.DESC: OFPDescStats.decode_all,
    MultipartType.FLOW: OFPFlowStats.decode_all,
    MultipartType.TABLE: OFPTableStats.decode_all,
    MultipartType.PORT_STATS: OFPPortStats.decode_all,
    MultipartType.QUEUE: OFPQueueStats.decode_all,
    MultipartType.PORT_DESC: OFPPort.decode_all,
}

MultipartBody = Union[None, RawBody, OFPDescStats, OFPFlowStatsRequest, OFPPortStatsRequest,
                      OFPQueueStatsRequest, tuple]


def _encode_multipart_body(body):
    if body is None:
        return b''
    if isinstance(body, tuple):
        return b''.join(record.encode() for record in body)
    return body.encode()


@dataclass(frozen=True)
class _MultipartBase(OfpMessage):
    """
    Multipart header + body

    body is None for empty requests, a request/desc object, a tuple of
    stats records for list replies, or RawBody for unmodelled types.
    """

    mp_type: int = MultipartType.DESC
    flags: int = 0
    body: MultipartBody = None

    _struct: ClassVar = struct.Struct('!HH4x')
    _codecs: ClassVar[dict] = {}

    def _encode_body(self):
        return self._struct.pack(self.mp_type, self.flags) + _encode_multipart_body(self.body)

    @classmethod
    def _decode_body(cls, xid, body):
        mp_type, flags = cls._struct.unpack_from(body)
        payload = body[cls._struct.size:]
        if mp_type not in cls._codecs:
            return cls(xid, mp_type, flags, RawBody(payload))
        decoder = cls._codecs[mp_type]
        if decoder is None:
            if payload:
                raise MessageError(ErrorType.BAD_REQUEST, BadRequestCode.BAD_LEN,
                                   f'multipart {mp_type} request carries a body')
            return cls(xid, mp_type, flags, None)
        return cls(xid, mp_type, flags, decoder(payload))

    @property
    def more(self):
        return bool(self.flags & OFPMPF_REPLY_MORE)


@_register_parser
@_set_msg_type(MsgType.MULTIPART_REQUEST)
@dataclass(frozen=True)
class OFPMultipartRequest(_MultipartBase):
    _codecs: ClassVar[dict] = _MULTIPART_REQUESTS


@_register_parser
@_set_msg_type(MsgType.MULTIPART_REPLY)
@dataclass(frozen=True)
class OFPMultipartReply(_MultipartBase):
    _codecs: ClassVar[dict] = _MULTIPART_REPLIES


@_register_parser
@_set_msg_type(MsgType.BARRIER_REQUEST)
@dataclass(frozen=True)
class OFPBarrierRequest(OfpMessage):
    pass


@_register_parser
@_set_msg_type(MsgType.BARRIER_REPLY)
@dataclass(frozen=True)
class OFPBarrierReply(OfpMessage):
    pass


@dataclass(frozen=True)
class OFPUnsupported(OfpMessage):
    """A message of a type this switch does not implement (answered with BAD_TYPE)"""

    raw_type: int = 0
    raw_version: int = OFP_VERSION
    body: bytes = field(default=b'')

    def encode_parts(self):
        return self.raw_version, self.raw_type, self.body

    @property
    def version(self):
        return self.raw_version


# ---------------------------------------------------------------------------
# Framing

def encode(msg: OfpMessage) -> bytes:
    """
    Serialize a message, header length filled in

    Raises:
        EncodingError: the message does not fit the 16-bit length field
    """
    if isinstance(msg, OFPUnsupported):
        version, msg_type, body = msg.encode_parts()
    else:
        version, msg_type, body = msg.version, msg.msg_type, msg._encode_body()
    length = OFP_HEADER_LEN + len(body)
    if length > OFP_MAX_MESSAGE_LEN:
        raise EncodingError(f'{type(msg).__name__} is {length} bytes; the length field holds {OFP_MAX_MESSAGE_LEN}')
    return OFP_HEADER.pack(version, msg_type, length, msg.xid) + body


def peek_header(buf):
    """
    Read the header at the start of buf

    Returns:
        tuple: (version, msg_type, length, xid)

    Raises:
        FramingError: fewer than 8 bytes or a length field below 8
    """
    if len(buf) < OFP_HEADER_LEN:
        raise FramingError(f'need {OFP_HEADER_LEN} header bytes, have {len(buf)}')
    version, msg_type, length, xid = OFP_HEADER.unpack_from(buf)
    if length < OFP_HEADER_LEN:
        raise FramingError(f'header length field {length} is below {OFP_HEADER_LEN}')
    return version, msg_type, length, xid


def decode(buf) -> OfpMessage:
    """
    Decode the first complete message in buf

    Raises:
        FramingError: connection-fatal framing problem
        MessageError: the message is malformed (connection survives); carries
            the xid and leading bytes of the message for the error reply
    """
    version, msg_type, length, xid = peek_header(buf)
    if len(buf) < length:
        raise FramingError(f'message declares {length} bytes, only {len(buf)} available')
    raw = bytes(buf[:length])
    body = raw[OFP_HEADER_LEN:]

    try:
        if msg_type == MsgType.HELLO:
            return OFPHello(xid=xid, elements=body, hello_version=version)
        if version != OFP_VERSION:
            raise MessageError(ErrorType.BAD_REQUEST, BadRequestCode.BAD_VERSION,
                               f'version {version} after negotiation')
        if msg_type not in _MSG_PARSERS:
            return OFPUnsupported(xid=xid, raw_type=msg_type, raw_version=version, body=body)
        return _MSG_PARSERS[msg_type]._decode_body(xid, body)
    except struct.error as e:
        raise MessageError(ErrorType.BAD_REQUEST, BadRequestCode.BAD_LEN, str(e), xid=xid, data=raw[:64]) from e
    except MessageError as e:
        e.xid, e.data = xid, raw[:64]
        raise


def decode_stream(buf):
    """
    Split a byte buffer into complete messages

    Returns:
        tuple: (list of raw message bytes, leftover bytes)
    """
    frames = []
    offset = 0
    while len(buf) - offset >= OFP_HEADER_LEN:
        _, _, length, _ = peek_header(buf[offset:])
        if len(buf) - offset < length:
            break
        frames.append(bytes(buf[offset:offset + length]))
        offset += length
    return frames, bytes(buf[offset:])


def split_multipart_reply(xid, mp_type, records, limit=OFP_MAX_MESSAGE_LEN):
    """
    Pack stats records into as many replies as needed

    Every reply but the last carries OFPMPF_REPLY_MORE.

    Returns:
        list: OFPMultipartReply messages
    """
    overhead = OFP_HEADER_LEN + _MultipartBase._struct.size
    chunks, current, size = [], [], overhead
    for record in records:
        record_len = len(record.encode())
        if current and size + record_len > limit:
            chunks.append(tuple(current))
            current, size = [], overhead
        current.append(record)
        size += record_len
    chunks.append(tuple(current))
    return [
        OFPMultipartReply(xid=xid, mp_type=mp_type, flags=OFPMPF_REPLY_MORE if i < len(chunks) - 1 else 0, body=chunk)
        for i, chunk in enumerate(chunks)
    ]


__all__ = [
    'OfpMessage', 'OFPHello', 'OFPErrorMsg', 'OFPEchoRequest', 'OFPEchoReply', 'OFPFeaturesRequest',
    'OFPFeaturesReply', 'OFPGetConfigRequest', 'OFPGetConfigReply', 'OFPSetConfig', 'OFPPacketIn',
    'OFPFlowRemoved', 'OFPPacketOut', 'OFPFlowMod', 'OFPTableMod', 'OFPMultipartRequest',
    'OFPMultipartReply', 'OFPBarrierRequest', 'OFPBarrierReply', 'OFPUnsupported',
    'encode', 'decode', 'decode_stream', 'peek_header', 'split_multipart_reply',
]
