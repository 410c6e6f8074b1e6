"""
Action engine, header rewriting and the packet buffer
"""

import struct

import numpy as np
import pytest

from src.extractors.header_extractor import IP_PROTO_TCP, extract_layout, parse
from src.harness.frame_builder import FrameTemplate, build_frame
from src.models.actions import Action, ActionSet
from src.models.errors import BufferUnknownError, MessageError
from src.models.frames import RawFrame
from src.openflow.constants import (
    OFPP_ALL,
    OFPP_CONTROLLER,
    OFPP_FLOOD,
    OFPP_IN_PORT,
    OFPP_TABLE,
    BadActionCode,
)
from src.processors.action_engine import ActionEngine, controller_max_len, validate_actions
from src.processors.packet_buffer import PacketBuffer
from src.utils.checksum import checksum_adjust, internet_checksum


def _frame(port=0, size=64, **fields):
    return RawFrame(port, build_frame(FrameTemplate(**fields), size))


def _ipv4_ok(data):
    layout = extract_layout(data)
    header = data[layout.l3_offset:layout.l3_offset + layout.l3_len]
    return internet_checksum(header) == 0


def _l4_ok(data):
    layout = extract_layout(data)
    ip = data[layout.l3_offset:]
    total_length = struct.unpack_from('!H', ip, 2)[0]
    segment = data[layout.l4_offset:layout.l3_offset + total_length]
    pseudo = ip[12:20] + struct.pack('!BBH', 0, layout.l4_proto, len(segment))
    return internet_checksum(pseudo + segment) == 0


@pytest.fixture
def engine():
    return ActionEngine(4, PacketBuffer(capacity=2, ttl=5.0))


class TestStructural:
    def test_push_vlan_then_set_vid(self, engine):
        frame = _frame()
        [(port, out)] = engine.execute(frame, [Action.push_vlan(), Action.set_field('vlan_vid', 100),
                                               Action.output(1)])
        assert port == 1
        assert out[12:16] == bytes.fromhex('81000064')
        assert out[:12] == frame.data[:12]
        assert out[16:] == frame.data[12:]
        assert parse(RawFrame(1, out)).vlan_vid == 100

    def test_pop_vlan_restores_frame(self, engine):
        frame = _frame()
        [(_, tagged)] = engine.execute(frame, [Action.push_vlan(), Action.output(1)])
        [(_, untagged)] = engine.execute(RawFrame(1, tagged), [Action.pop_vlan(), Action.output(2)])
        assert untagged == frame.data

    def test_push_vlan_copies_outer_tci(self, engine):
        frame = _frame(vlan_tags=((300, 5),))
        [(_, out)] = engine.execute(frame, [Action.push_vlan(0x88A8), Action.output(1)])
        assert out[12:14] == b'\x88\xa8'
        assert out[14:16] == frame.data[14:16]
        assert extract_layout(out).vlan_offsets == (14, 18)

    def test_push_and_pop_mpls(self, engine):
        frame = _frame(ip_ttl=37)
        [(_, labelled)] = engine.execute(frame, [Action.push_mpls(), Action.set_field('mpls_label', 0x12345),
                                                 Action.output(1)])
        assert labelled[12:14] == b'\x88\x47'
        (shim,) = struct.unpack_from('!I', labelled, 14)
        assert shim >> 12 == 0x12345
        assert shim & 0x100
        assert shim & 0xFF == 37
        assert parse(RawFrame(1, labelled)).mpls_label == 0x12345

        [(_, restored)] = engine.execute(RawFrame(1, labelled), [Action.pop_mpls(0x0800), Action.output(2)])
        assert restored == frame.data

    def test_missing_header_is_skipped(self, engine):
        frame = _frame()
        [(_, out)] = engine.execute(frame, [Action.pop_vlan(), Action.dec_mpls_ttl(), Action.output(1)])
        assert out == frame.data
        assert engine.counters.skipped_actions == 2


class TestRewrites:
    @pytest.mark.parametrize('proto', [17, IP_PROTO_TCP])
    def test_checksums_stay_valid(self, engine, proto):
        frame = _frame(ip_proto=proto, payload=b'payload!')
        actions = [
            Action.set_field('ipv4_src', 0xC0A80001),
            Action.set_field('ipv4_dst', 0xC0A80002),
            Action.set_field('ip_dscp', 46),
            Action.set_field('tcp_dst' if proto == IP_PROTO_TCP else 'udp_dst', 8080),
            Action.output(1),
        ]
        [(_, out)] = engine.execute(frame, actions)
        header = parse(RawFrame(1, out))
        assert (header.ipv4_src, header.ipv4_dst, header.ip_dscp, header.l4_dst) == (0xC0A80001, 0xC0A80002, 46, 8080)
        assert _ipv4_ok(out)
        assert _l4_ok(out)

    def test_dec_ttl(self, engine):
        [(_, out)] = engine.execute(_frame(ip_ttl=64), [Action.dec_ttl(), Action.output(1)])
        assert out[14 + 8] == 63
        assert _ipv4_ok(out)

    def test_dec_ttl_at_one_drops(self, engine):
        assert engine.execute(_frame(ip_ttl=1), [Action.dec_ttl(), Action.output(1)]) == []
        assert engine.counters.dropped_ttl == 1

    def test_dec_mpls_ttl_at_one_drops(self, engine):
        frame = _frame(mpls_labels=((5, 0, 1),))
        assert engine.execute(frame, [Action.dec_mpls_ttl(), Action.output(1)]) == []

    def test_ttl_expiry_keeps_earlier_outputs(self, engine):
        frame = _frame(ip_ttl=1)
        out = engine.execute(frame, [Action.output(1), Action.dec_ttl(), Action.output(2)])
        assert out == [(1, frame.data)]
        assert engine.counters.dropped_ttl == 1
        assert engine.counters.emitted == 1

    def test_ttl_expiry_in_action_set_emits_nothing(self, engine):
        action_set = ActionSet([Action.output(1), Action.dec_ttl()])
        assert engine.execute(_frame(ip_ttl=1), action_set) == []

    def test_set_mac_addresses(self, engine):
        [(_, out)] = engine.execute(_frame(), [Action.set_field('eth_dst', 0xAABBCCDDEEFF),
                                               Action.set_field('eth_src', 0x112233445566), Action.output(1)])
        assert out[:12] == bytes.fromhex('aabbccddeeff112233445566')

    def test_set_mpls_tc_and_vlan_pcp(self, engine):
        frame = _frame(vlan_tags=((9, 0),), mpls_labels=((77, 0, 64),))
        [(_, out)] = engine.execute(frame, [Action.set_field('vlan_pcp', 6), Action.set_field('mpls_tc', 3),
                                            Action.output(1)])
        header = parse(RawFrame(1, out))
        assert (header.vlan_vid, header.vlan_pcp) == (9, 6)
        assert (header.mpls_label, header.mpls_tc) == (77, 3)

    def test_unsettable_field(self):
        with pytest.raises(ValueError):
            Action.set_field('in_port', 1)


class TestOutputs:
    def test_each_output_sees_modifications_so_far(self, engine):
        frame = _frame()
        egress = engine.execute(frame, [Action.output(1), Action.set_field('eth_dst', 0xFFFFFFFFFFFF),
                                        Action.output(2)])
        assert egress[0] == (1, frame.data)
        assert egress[1][0] == 2
        assert egress[1][1][:6] == b'\xff' * 6

    def test_action_set_runs_in_set_order(self, engine):
        action_set = ActionSet([Action.output(3), Action.set_field('eth_src', 1)])
        [(port, out)] = engine.execute(_frame(), action_set)
        assert port == 3
        assert out[6:12] == (1).to_bytes(6, 'big')

    @pytest.mark.parametrize('reserved', [OFPP_ALL, OFPP_FLOOD])
    def test_flood_excludes_ingress(self, engine, reserved):
        egress = engine.execute(_frame(port=2), [Action.output(reserved)])
        assert [port for port, _ in egress] == [0, 1, 3]

    def test_in_port_and_reserved_passthrough(self, engine):
        egress = engine.execute(_frame(port=2), [Action.output(OFPP_IN_PORT), Action.output(OFPP_CONTROLLER)])
        assert [port for port, _ in egress] == [2, OFPP_CONTROLLER]

    def test_empty_actions_drop(self, engine):
        assert engine.execute(_frame(), ActionSet()) == []
        assert engine.counters.dropped_empty == 1
        assert engine.counters.executed == 1

    def test_validate_actions(self):
        validate_actions([Action.output(3), Action.output(OFPP_FLOOD)], 4)
        validate_actions([Action.output(OFPP_TABLE)], 4, packet_out=True)
        for bad in (Action.output(4), Action.output(OFPP_TABLE)):
            with pytest.raises(MessageError) as e:
                validate_actions([bad], 4)
            assert e.value.code == BadActionCode.BAD_OUT_PORT

    def test_controller_max_len(self):
        assert controller_max_len([Action.output(1), Action.output(OFPP_CONTROLLER, 64)]) == 64
        assert controller_max_len([Action.output(1)]) == 0xFFFF


class TestBuffer:
    def test_buffer_and_release(self, engine):
        frame = _frame(port=1)
        buffer_id = engine.buffer_for_controller(frame, miss_table=0)
        assert buffer_id in engine.buffer
        [(port, out)] = engine.release(buffer_id, [Action.output(3)])
        assert (port, out) == (3, frame.data)
        assert buffer_id not in engine.buffer
        assert engine.counters.released == 1

    def test_unknown_buffer(self, engine):
        with pytest.raises(BufferUnknownError):
            engine.release(12345, [Action.output(1)])

    def test_full_buffer(self, engine):
        ids = [engine.buffer_for_controller(_frame(), 0) for _ in range(3)]
        assert ids[2] is None
        assert len(set(ids[:2])) == 2
        assert engine.counters.buffer_full == 1

    def test_expiry(self):
        buffer = PacketBuffer(capacity=4, ttl=2.0)
        first = buffer.store(_frame(), 0, now=10.0)
        second = buffer.store(_frame(), 0, now=11.0)
        assert [p.buffer_id for p in buffer.expire(now=12.0)] == [first]
        assert buffer.live_ids() == {second}

    def test_zero_ttl_keeps_forever(self):
        buffer = PacketBuffer(capacity=1, ttl=0)
        buffer.store(_frame(), 0, now=0.0)
        assert buffer.expire(now=1e9) == []


def test_incremental_checksum_matches_recomputation():
    rng = np.random.default_rng(1)
    for _ in range(500):
        words = rng.integers(0, 1 << 16, size=10)
        data = b''.join(int(w).to_bytes(2, 'big') for w in words)
        index = int(rng.integers(0, 10))
        new_word = int(rng.integers(0, 1 << 16))
        changed = bytearray(data)
        changed[2 * index:2 * index + 2] = new_word.to_bytes(2, 'big')
        adjusted = checksum_adjust(internet_checksum(data), int(words[index]), new_word)
        recomputed = internet_checksum(bytes(changed))
        # one's complement has two zeros
        assert recomputed == adjusted or {recomputed, adjusted} == {0, 0xFFFF}
