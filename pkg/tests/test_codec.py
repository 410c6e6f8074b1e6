"""
OpenFlow 1.3 wire codec
"""

import struct

import numpy as np
import pytest

from src.models.actions import SETTABLE_FIELDS, Action
from src.models.errors import EncodingError, FramingError, MessageError
from src.models.flow import MatchField
from src.openflow import messages as ofm
from src.openflow.constants import (
    OFP_NO_BUFFER,
    OFPMPF_REPLY_MORE,
    OFPP_CONTROLLER,
    BadActionCode,
    BadInstructionCode,
    BadMatchCode,
    BadRequestCode,
    ErrorType,
    MultipartType,
)
from src.openflow.structs import (
    ApplyActions,
    ClearActions,
    GotoTable,
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
    WriteActions,
    decode_match,
    encode_match,
)

FIELD_BITS = {
    'in_port': 32, 'eth_dst': 48, 'eth_src': 48, 'eth_type': 16, 'vlan_vid': 13, 'vlan_pcp': 3,
    'ip_dscp': 6, 'ip_proto': 8, 'ipv4_src': 32, 'ipv4_dst': 32, 'tcp_src': 16, 'tcp_dst': 16,
    'udp_src': 16, 'udp_dst': 16, 'mpls_label': 20, 'mpls_tc': 3,
}
SETTABLE = [name for name in FIELD_BITS if name in SETTABLE_FIELDS]


class TestHeader:
    def test_hello_bytes_decode(self):
        msg = ofm.decode(bytes.fromhex('040000080000002a'))
        assert isinstance(msg, ofm.OFPHello)
        assert msg.xid == 42
        assert msg.version == 4

    def test_bare_hello_encodes_to_eight_bytes(self):
        assert ofm.encode(ofm.OFPHello(xid=0)) == bytes.fromhex('0400000800000000')

    def test_hello_version_bitmap(self):
        msg = ofm.decode(ofm.encode(ofm.OFPHello.with_versions(7, versions=(1, 4))))
        assert msg.versions == {1, 4}
        assert len(ofm.encode(msg)) == 16

    def test_echo_data_is_padded(self):
        raw = ofm.encode(ofm.OFPEchoRequest(xid=3, data=b'abc'))
        assert len(raw) == 16
        assert ofm.decode(raw).data == b'abc' + bytes(5)

    def test_short_buffer_is_a_framing_error(self):
        with pytest.raises(FramingError):
            ofm.decode(b'\x04\x00\x00')

    def test_length_below_header(self):
        with pytest.raises(FramingError):
            ofm.decode(bytes.fromhex('0400000400000001'))

    def test_declared_length_past_buffer(self):
        with pytest.raises(FramingError):
            ofm.decode(bytes.fromhex('0402001000000001'))

    def test_wrong_version_after_hello(self):
        with pytest.raises(MessageError) as e:
            ofm.decode(bytes.fromhex('0102000800000009'))
        assert (e.value.code, e.value.xid) == (BadRequestCode.BAD_VERSION, 9)

    def test_unknown_type_decodes_as_unsupported(self):
        msg = ofm.decode(bytes.fromhex('0418000800000005'))
        assert isinstance(msg, ofm.OFPUnsupported)
        assert (msg.raw_type, msg.xid) == (0x18, 5)

    def test_truncated_body_is_bad_len(self):
        raw = bytearray(ofm.encode(ofm.OFPFeaturesReply(xid=4)))[:16]
        struct.pack_into('!H', raw, 2, 16)
        with pytest.raises(MessageError) as e:
            ofm.decode(bytes(raw))
        assert e.value.code == BadRequestCode.BAD_LEN
        assert e.value.data == bytes(raw)

    def test_oversized_message(self):
        with pytest.raises(EncodingError):
            ofm.encode(ofm.OFPEchoRequest(data=bytes(70000)))

    def test_decode_stream_splits_messages(self):
        raw = ofm.encode(ofm.OFPHello(xid=1)) + ofm.encode(ofm.OFPEchoRequest(xid=2, data=b'12345678'))
        frames, rest = ofm.decode_stream(raw + raw[:5])
        assert [ofm.decode(f).xid for f in frames] == [1, 2]
        assert rest == raw[:5]

    def test_switch_config_accepts_short_form(self):
        raw = bytes.fromhex('0409000c00000001') + struct.pack('!HH', 0, 200)
        msg = ofm.decode(raw)
        assert msg.miss_send_len == 200
        assert len(ofm.encode(msg)) == 16


class TestStructures:
    def test_match_padding(self):
        raw = encode_match([MatchField('in_port', 1)])
        assert raw == bytes.fromhex('0001000c800000040000000100000000')
        assert decode_match(raw, 0) == ((MatchField('in_port', 1),), 16)

    def test_empty_match(self):
        assert encode_match([]) == bytes.fromhex('0001000400000000')

    def test_unknown_oxm_field(self):
        raw = bytes.fromhex('0001000a') + bytes.fromhex('8000ff02ffff') + bytes(6)
        with pytest.raises(MessageError) as e:
            decode_match(raw, 0)
        assert e.value.code == BadMatchCode.BAD_FIELD

    def test_bad_action_length(self):
        body = struct.pack('!IIH6x', OFP_NO_BUFFER, OFPP_CONTROLLER, 8) + struct.pack('!HH4x', 0, 12)
        raw = struct.pack('!BBHI', 4, 13, 8 + len(body), 1) + body
        with pytest.raises(MessageError) as e:
            ofm.decode(raw)
        assert (e.value.error_type, e.value.code) == (ErrorType.BAD_ACTION, BadActionCode.BAD_LEN)

    def test_unsupported_action_type(self):
        body = struct.pack('!IIH6x', OFP_NO_BUFFER, OFPP_CONTROLLER, 8) + struct.pack('!HH4x', 11, 8)
        raw = struct.pack('!BBHI', 4, 13, 8 + len(body), 1) + body
        with pytest.raises(MessageError) as e:
            ofm.decode(raw)
        assert e.value.code == BadActionCode.BAD_TYPE

    def test_unknown_instruction(self):
        msg = ofm.OFPFlowMod(xid=1, instructions=(GotoTable(1),))
        raw = bytearray(ofm.encode(msg))
        struct.pack_into('!H', raw, len(raw) - 8, 6)
        with pytest.raises(MessageError) as e:
            ofm.decode(bytes(raw))
        assert e.value.code == BadInstructionCode.UNKNOWN_INST

    def test_multipart_split_sets_more_flag(self):
        records = [OFPPortStats(port_no=i) for i in range(1200)]
        replies = ofm.split_multipart_reply(9, MultipartType.PORT_STATS, records)
        assert len(replies) > 1
        assert all(r.flags & OFPMPF_REPLY_MORE for r in replies[:-1])
        assert not replies[-1].flags & OFPMPF_REPLY_MORE
        assert sum(len(r.body) for r in replies) == 1200
        assert all(len(ofm.encode(r)) <= 0xFFFF for r in replies)


# ---------------------------------------------------------------------------
# Randomized corpus

def _field(rng, name, masked=None):
    bits = FIELD_BITS[name]
    value = int(rng.integers(0, 1 << bits, dtype=np.uint64))
    if masked is None:
        masked = rng.random() < 0.3
    if masked:
        mask = int(rng.integers(0, 1 << bits, dtype=np.uint64))
        return MatchField(name, value & mask, mask)
    return MatchField(name, value)


def _match(rng):
    names = rng.choice(list(FIELD_BITS), size=int(rng.integers(0, 6)), replace=False)
    return tuple(_field(rng, str(name)) for name in names)


def _action(rng):
    kind = int(rng.integers(0, 10))
    if kind == 0:
        return Action.output(int(rng.integers(0, 1 << 32, dtype=np.uint64)), int(rng.integers(0, 1 << 16)))
    if kind == 1:
        return Action.push_vlan(int(rng.choice([0x8100, 0x88A8])))
    if kind == 2:
        return Action.pop_vlan()
    if kind == 3:
        return Action.push_mpls(int(rng.choice([0x8847, 0x8848])))
    if kind == 4:
        return Action.pop_mpls(0x0800)
    if kind == 5:
        return Action.set_ttl(int(rng.integers(0, 256)))
    if kind == 6:
        return Action.dec_ttl()
    if kind == 7:
        return Action.set_mpls_ttl(int(rng.integers(0, 256)))
    if kind == 8:
        return Action.dec_mpls_ttl()
    field = _field(rng, str(rng.choice(SETTABLE)), masked=False)
    return Action.set_field(field.name, field.value)


def _actions(rng):
    return tuple(_action(rng) for _ in range(int(rng.integers(0, 5))))


def _instructions(rng):
    pool = [GotoTable(int(rng.integers(1, 255))), WriteActions(_actions(rng)),
            ApplyActions(_actions(rng)), ClearActions()]
    picks = rng.choice(len(pool), size=int(rng.integers(0, 4)), replace=False)
    return tuple(pool[int(i)] for i in picks)


def _u(rng, bits):
    return int(rng.integers(0, 1 << bits, dtype=np.uint64))


def _bytes(rng, limit=80):
    return rng.integers(0, 256, size=int(rng.integers(0, limit)), dtype=np.uint8).tobytes()


def _random_message(rng):
    xid = _u(rng, 32)
    kind = int(rng.integers(0, 20))
    if kind == 0:
        return ofm.OFPHello.with_versions(xid)
    if kind == 1:
        return ofm.OFPErrorMsg(xid=xid, error_type=_u(rng, 16), code=_u(rng, 16), data=_bytes(rng))
    if kind == 2:
        return ofm.OFPEchoRequest(xid=xid, data=_bytes(rng))
    if kind == 3:
        return ofm.OFPEchoReply(xid=xid, data=_bytes(rng))
    if kind == 4:
        return ofm.OFPFeaturesRequest(xid=xid)
    if kind == 5:
        return ofm.OFPFeaturesReply(xid=xid, datapath_id=_u(rng, 64), n_buffers=_u(rng, 32), n_tables=_u(rng, 8),
                                    auxiliary_id=_u(rng, 8), capabilities=_u(rng, 32), reserved=_u(rng, 32))
    if kind == 6:
        return ofm.OFPGetConfigRequest(xid=xid)
    if kind == 7:
        return ofm.OFPGetConfigReply(xid=xid, flags=_u(rng, 16), miss_send_len=_u(rng, 16))
    if kind == 8:
        return ofm.OFPSetConfig(xid=xid, flags=_u(rng, 16), miss_send_len=_u(rng, 16))
    if kind == 9:
        return ofm.OFPPacketIn(xid=xid, buffer_id=_u(rng, 32), total_len=_u(rng, 16), reason=_u(rng, 2),
                               table_id=_u(rng, 8), cookie=_u(rng, 64), match=_match(rng), data=_bytes(rng))
    if kind == 10:
        return ofm.OFPFlowRemoved(xid=xid, cookie=_u(rng, 64), priority=_u(rng, 16), reason=_u(rng, 2),
                                  table_id=_u(rng, 8), duration_sec=_u(rng, 32), duration_nsec=_u(rng, 30),
                                  idle_timeout=_u(rng, 16), hard_timeout=_u(rng, 16),
                                  packet_count=_u(rng, 64), byte_count=_u(rng, 64), match=_match(rng))
    if kind == 11:
        return ofm.OFPPacketOut(xid=xid, buffer_id=_u(rng, 32), in_port=_u(rng, 32),
                                actions=_actions(rng), data=_bytes(rng))
    if kind == 12:
        return ofm.OFPFlowMod(xid=xid, cookie=_u(rng, 64), cookie_mask=_u(rng, 64), table_id=_u(rng, 8),
                              command=_u(rng, 3), idle_timeout=_u(rng, 16), hard_timeout=_u(rng, 16),
                              priority=_u(rng, 16), buffer_id=_u(rng, 32), out_port=_u(rng, 32),
                              out_group=_u(rng, 32), flags=_u(rng, 3), match=_match(rng),
                              instructions=_instructions(rng))
    if kind == 13:
        return ofm.OFPTableMod(xid=xid, table_id=_u(rng, 8), config=_u(rng, 2))
    if kind == 14:
        return ofm.OFPBarrierRequest(xid=xid)
    if kind == 15:
        return ofm.OFPBarrierReply(xid=xid)
    if kind == 16:
        body = [None, OFPFlowStatsRequest(_u(rng, 8), _u(rng, 32), _u(rng, 32), _u(rng, 64), _u(rng, 64), _match(rng)),
                None, OFPPortStatsRequest(_u(rng, 32)), OFPQueueStatsRequest(_u(rng, 32), _u(rng, 32)), None]
        mp_type = [MultipartType.DESC, MultipartType.FLOW, MultipartType.TABLE, MultipartType.PORT_STATS,
                   MultipartType.QUEUE, MultipartType.PORT_DESC]
        pick = int(rng.integers(0, len(body)))
        return ofm.OFPMultipartRequest(xid=xid, mp_type=mp_type[pick], body=body[pick])
    if kind == 17:
        return _random_reply(rng, xid)
    if kind == 18:
        return ofm.OFPMultipartRequest(xid=xid, mp_type=MultipartType.AGGREGATE,
                                       body=RawBody(bytes(8 * int(rng.integers(0, 5)))))
    return ofm.OFPUnsupported(xid=xid, raw_type=int(rng.choice([4, 12, 15, 16, 22, 24, 25, 29])),
                              body=bytes(8 * int(rng.integers(0, 4))))


def _random_reply(rng, xid):
    flags = int(rng.integers(0, 2))
    count = int(rng.integers(0, 4))
    pick = int(rng.integers(0, 6))
    if pick == 0:
        return ofm.OFPMultipartReply(xid=xid, mp_type=MultipartType.DESC, flags=flags,
                                     body=OFPDescStats('mfr', 'hw', 'sw', '42', 'dp'))
    if pick == 1:
        records = tuple(OFPFlowStats(_u(rng, 8), _u(rng, 32), _u(rng, 30), _u(rng, 16), _u(rng, 16), _u(rng, 16),
                                     _u(rng, 3), _u(rng, 64), _u(rng, 64), _u(rng, 64), _match(rng),
                                     _instructions(rng)) for _ in range(count))
        mp_type = MultipartType.FLOW
    elif pick == 2:
        records = tuple(OFPTableStats(_u(rng, 8), _u(rng, 32), _u(rng, 64), _u(rng, 64)) for _ in range(count))
        mp_type = MultipartType.TABLE
    elif pick == 3:
        records = tuple(OFPPortStats(*(_u(rng, 32),) + tuple(_u(rng, 64) for _ in range(12)) + (_u(rng, 32), _u(rng, 30)))
                        for _ in range(count))
        mp_type = MultipartType.PORT_STATS
    elif pick == 4:
        records = tuple(OFPQueueStats(_u(rng, 32), _u(rng, 32), _u(rng, 64), _u(rng, 64), _u(rng, 64),
                                      _u(rng, 32), _u(rng, 30)) for _ in range(count))
        mp_type = MultipartType.QUEUE
    else:
        records = tuple(OFPPort(_u(rng, 32), _u(rng, 48), f'port{i}', *(_u(rng, 32) for _ in range(8)))
                        for i in range(count))
        mp_type = MultipartType.PORT_DESC
    return ofm.OFPMultipartReply(xid=xid, mp_type=mp_type, flags=flags, body=records)


def test_random_corpus_round_trips():
    rng = np.random.default_rng(1303)
    seen = set()
    for _ in range(600):
        msg = _random_message(rng)
        raw = ofm.encode(msg)
        assert len(raw) % 8 == 0, type(msg).__name__
        assert struct.unpack_from('!H', raw, 2)[0] == len(raw)
        decoded = ofm.decode(raw)
        assert decoded == msg
        assert ofm.encode(decoded) == raw
        seen.add(type(msg))
    assert len(seen) >= 18


def test_decoder_survives_corruption():
    rng = np.random.default_rng(99)
    for _ in range(600):
        raw = bytearray(ofm.encode(_random_message(rng)))
        for offset in rng.integers(8, max(9, len(raw)), size=3):
            if offset < len(raw):
                raw[offset] = int(rng.integers(0, 256))
        try:
            ofm.decode(bytes(raw))
        except MessageError as e:
            assert e.data == bytes(raw[:64])
