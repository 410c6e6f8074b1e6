"""
Switch core: dispositions, buffering, statistics and frame conservation
"""

import time

import numpy as np
import pytest

from helpers import forward, write_actions
from src.dataplane.switch import Switch, run_dataplane
from src.harness.frame_builder import FrameTemplate, build_frame
from src.models.actions import Action
from src.models.errors import BufferUnknownError, ConfigurationError, MessageError
from src.models.frames import RawFrame
from src.models.switch_config import SwitchConfig
from src.openflow import messages as ofm
from src.openflow.constants import (
    OFP_NO_BUFFER,
    OFPCML_NO_BUFFER,
    OFPP_ANY,
    OFPP_CONTROLLER,
    OFPP_FLOOD,
    OFPP_TABLE,
    OFPQ_ALL,
    BadRequestCode,
    PacketInReason,
)
from src.storage.pcap import read_frames


def _feed(switch, port, frames):
    for data in frames:
        switch.ingress(port, data)
        switch.drain()


def _packet_ins(switch):
    return [m for m in switch.outbound.drain() if isinstance(m, ofm.OFPPacketIn)]


class TestForwarding:
    def test_hundred_frames_on_one_flow(self, switch, udp_frame):
        switch.apply_flow_mod(forward(0, 1))
        egressed = []
        for _ in range(10):
            _feed(switch, 0, [udp_frame] * 10)
            egressed.extend(switch.ports[1].drain_output())
        assert len(egressed) == 100
        assert all(e.data == udp_frame for e in egressed)
        assert switch.ports[1].snapshot().tx_packets == 100
        assert switch.stats.forwarded == 100
        assert switch.conserved()

    def test_flood_skips_ingress(self, switch, udp_frame):
        switch.apply_flow_mod(forward(0, OFPP_FLOOD))
        _feed(switch, 0, [udp_frame])
        assert [p.snapshot().tx_packets for p in switch.ports] == [0, 1, 1, 1]
        assert switch.stats.forwarded == 1

    def test_empty_action_set_drops(self, switch, udp_frame):
        switch.apply_flow_mod(write_actions())
        _feed(switch, 0, [udp_frame])
        assert switch.stats.dropped_action == 1
        assert switch.conserved()

    def test_goto_chain(self, switch, udp_frame):
        switch.apply_flow_mod(write_actions(Action.set_field('eth_dst', 0xAA), goto=2))
        switch.apply_flow_mod(write_actions(Action.output(3), table_id=2))
        _feed(switch, 0, [udp_frame])
        [egressed] = switch.ports[3].drain_output()
        assert egressed.data[:6] == (0xAA).to_bytes(6, 'big')

    def test_malicious_frame(self, switch, udp_frame):
        switch.apply_flow_mod(forward(0, 1))
        assert switch.process_frame(RawFrame(0, udp_frame[:20])) == 'dropped_malicious'
        assert switch.ports[1].snapshot().tx_packets == 0

    def test_controller_output_action(self, switch, udp_frame):
        switch.apply_flow_mod(forward(0, OFPP_CONTROLLER, cookie=0x77))
        assert switch.process_frame(RawFrame(0, udp_frame)) == 'to_controller'
        [packet_in] = _packet_ins(switch)
        assert packet_in.reason == PacketInReason.ACTION
        assert packet_in.buffer_id == OFP_NO_BUFFER
        assert packet_in.cookie == 0x77
        assert packet_in.data[:packet_in.total_len] == udp_frame

    def test_unknown_ingress_port(self, switch, udp_frame):
        with pytest.raises(ConfigurationError):
            switch.ingress(4, udp_frame)


class TestMiss:
    def test_miss_buffers_and_sends_packet_in(self, switch, udp_frame):
        assert switch.process_frame(RawFrame(2, udp_frame)) == 'buffered'
        [packet_in] = _packet_ins(switch)
        assert packet_in.reason == PacketInReason.NO_MATCH
        assert packet_in.buffer_id in switch.engine.buffer
        assert packet_in.total_len == len(udp_frame)
        assert packet_in.data[:packet_in.total_len] == udp_frame
        assert packet_in.cookie == 0xFFFFFFFFFFFFFFFF

    def test_packet_in_truncated_to_miss_send_len(self, switch):
        frame = build_frame(FrameTemplate(), 300)
        switch.process_frame(RawFrame(0, frame))
        [packet_in] = _packet_ins(switch)
        assert packet_in.total_len == 300
        assert packet_in.data[:128] == frame[:128]
        assert len(packet_in.data) < 300

    def test_no_buffer_miss_send_len(self, switch, udp_frame):
        switch.miss_send_len = OFPCML_NO_BUFFER
        assert switch.process_frame(RawFrame(0, udp_frame)) == 'to_controller'
        [packet_in] = _packet_ins(switch)
        assert packet_in.buffer_id == OFP_NO_BUFFER
        assert len(switch.engine.buffer) == 0

    def test_packet_out_releases_buffer(self, switch, udp_frame):
        _feed(switch, 0, [udp_frame])
        [packet_in] = _packet_ins(switch)
        assert switch.conserved()
        assert switch.packet_out(packet_in.buffer_id, 0, [Action.output(2)]) == 'forwarded'
        assert switch.ports[2].drain_output()[0].data == udp_frame
        assert switch.stats.released == 1
        assert switch.conserved()
        with pytest.raises(BufferUnknownError):
            switch.packet_out(packet_in.buffer_id, 0, [Action.output(2)])

    def test_flow_mod_releases_buffer(self, switch, udp_frame):
        _feed(switch, 1, [udp_frame])
        [packet_in] = _packet_ins(switch)
        switch.apply_flow_mod(forward(1, 3, buffer_id=packet_in.buffer_id))
        assert switch.ports[3].snapshot().tx_packets == 1
        assert len(switch.engine.buffer) == 0
        assert switch.conserved()

    def test_drop_miss_policy(self, switch, udp_frame):
        switch.pipeline.table_mod(0, 2)
        assert switch.process_frame(RawFrame(0, udp_frame)) == 'dropped_miss'
        assert _packet_ins(switch) == []

    def test_drop_miss_policy_from_config(self, small_config, clock, udp_frame):
        switch = Switch(small_config.with_overrides(miss_policy='drop'), clock=clock)
        assert switch.process_frame(RawFrame(0, udp_frame)) == 'dropped_miss'

    def test_full_buffer_sends_unbuffered(self, switch, udp_frame):
        for _ in range(8):
            assert switch.process_frame(RawFrame(0, udp_frame)) == 'buffered'
        assert switch.process_frame(RawFrame(0, udp_frame)) == 'dropped_buffer_full'
        packet_ins = _packet_ins(switch)
        assert len(packet_ins) == 9
        assert packet_ins[-1].buffer_id == OFP_NO_BUFFER

    def test_full_packet_in_queue(self, small_config, clock, udp_frame):
        switch = Switch(small_config.with_overrides(packet_in_queue_limit=1), clock=clock)
        assert switch.process_frame(RawFrame(0, udp_frame)) == 'buffered'
        assert switch.process_frame(RawFrame(0, udp_frame)) == 'dropped_controller_queue'
        assert len(switch.engine.buffer) == 1
        assert switch.stats.dropped_controller_queue == 1

    def test_buffer_expiry(self, switch, clock, udp_frame):
        _feed(switch, 0, [udp_frame, udp_frame])
        clock.advance(4.0)
        assert switch.housekeeping()[1] == []
        clock.advance(1.0)
        _, expired = switch.housekeeping()
        assert len(expired) == 2
        assert switch.stats.dropped_expired == 2
        assert switch.conserved()


class TestPacketOut:
    def test_injected_frame_is_not_a_port_frame(self, switch, udp_frame):
        assert switch.packet_out(OFP_NO_BUFFER, 0, [Action.output(1)], udp_frame) == 'forwarded'
        assert switch.stats.injected == 1
        assert switch.stats.settled() == 0
        assert switch.conserved()

    def test_output_to_table(self, switch, udp_frame):
        switch.apply_flow_mod(forward(2, 3))
        switch.packet_out(OFP_NO_BUFFER, 2, [Action.output(OFPP_TABLE)], udp_frame)
        assert switch.ports[3].snapshot().tx_packets == 1
        assert switch.stats.settled() == 0


class TestQueues:
    def test_burst_overflows_input_queue(self, switch, udp_frame):
        switch.apply_flow_mod(forward(0, 1))
        accepted = [switch.ingress(0, udp_frame) for _ in range(160)]
        assert sum(accepted) == 16
        counters = switch.ports[0].snapshot()
        assert (counters.rx_packets, counters.rx_dropped) == (160, 144)
        assert switch.conserved()
        assert switch.drain() == 16
        assert switch.conserved()
        assert switch.stats.forwarded == 16

    def test_output_queue_overflow(self, small_config, clock, udp_frame):
        switch = Switch(small_config.with_overrides(output_queue_capacity=2), clock=clock)
        switch.apply_flow_mod(forward(0, 1))
        _feed(switch, 0, [udp_frame] * 3)
        assert switch.ports[1].snapshot().tx_dropped == 1
        assert switch.stats.forwarded == 3

    def test_arbiter_serves_fullest_port(self, switch, udp_frame):
        for port in (0, 1, 1, 1):
            switch.ingress(port, udp_frame)
        picked, _ = switch.arbitrate()
        assert picked == 1


class TestStatistics:
    def test_port_stats(self, switch, udp_frame):
        switch.apply_flow_mod(forward(0, 1))
        _feed(switch, 0, [udp_frame] * 3)
        stats = {r.port_no: r for r in switch.port_stats()}
        assert (stats[0].rx_packets, stats[0].rx_bytes) == (3, 3 * len(udp_frame))
        assert (stats[1].tx_packets, stats[1].tx_bytes) == (3, 3 * len(udp_frame))
        assert [r.port_no for r in switch.port_stats(1)] == [1]

    def test_queue_stats(self, switch, udp_frame):
        switch.apply_flow_mod(forward(0, 2))
        _feed(switch, 0, [udp_frame])
        [record] = switch.queue_stats(2, 0)
        assert (record.port_no, record.queue_id, record.tx_packets) == (2, 0, 1)
        assert len(switch.queue_stats(OFPP_ANY, OFPQ_ALL)) == 4
        assert switch.queue_stats(2, 3) == []

    def test_unknown_port(self, switch):
        with pytest.raises(MessageError) as e:
            switch.port_stats(7)
        assert e.value.code == BadRequestCode.BAD_PORT

    def test_port_descriptions(self, switch):
        ports = switch.port_descriptions()
        assert [p.port_no for p in ports] == [0, 1, 2, 3]
        assert len({p.hw_addr for p in ports}) == 4


def test_conservation_under_mixed_traffic(small_config, clock):
    """Random frames, flows and controller actions keep the identity exact"""
    rng = np.random.default_rng(17)
    switch = Switch(small_config.with_overrides(buffer_capacity=4), clock=clock)
    switch.apply_flow_mod(forward(0, 1))
    switch.apply_flow_mod(forward(1, OFPP_FLOOD))
    switch.apply_flow_mod(forward(2, OFPP_CONTROLLER))
    good = build_frame(FrameTemplate(), 64)
    for _ in range(2000):
        roll = rng.random()
        port = int(rng.integers(0, 4))
        if roll < 0.7:
            data = good if rng.random() < 0.8 else good[:int(rng.integers(0, 40))]
            switch.ingress(port, data)
        elif roll < 0.85:
            switch.drain(limit=int(rng.integers(1, 10)))
        elif roll < 0.95 and len(switch.engine.buffer):
            buffer_id = sorted(switch.engine.buffer.live_ids())[0]
            switch.packet_out(buffer_id, port, [Action.output(int(rng.integers(0, 4)))])
        else:
            clock.advance(float(rng.random() * 3))
            switch.housekeeping()
        switch.outbound.drain()
        assert switch.conserved(), switch.conservation()


def test_threaded_dataplane(small_config, udp_frame):
    switch = Switch(small_config.with_overrides(workers=2))
    switch.apply_flow_mod(forward(0, 1))
    handle = run_dataplane(switch=switch, housekeeping_interval=0.05)
    try:
        sent = 0
        deadline = time.monotonic() + 10
        while sent < 200 and time.monotonic() < deadline:
            if switch.ingress(0, udp_frame):
                sent += 1
            else:
                time.sleep(0.001)
        while switch.stats.forwarded < sent and time.monotonic() < deadline:
            time.sleep(0.01)
    finally:
        handle.shutdown(drain=True, timeout=5)
    assert not handle.running
    assert switch.stats.forwarded == 200
    assert switch.conserved()


def test_threaded_dataplane_drains_egress(small_config, udp_frame):
    switch = Switch(small_config.with_overrides(workers=2))
    switch.apply_flow_mod(forward(0, 1))
    left = []
    handle = run_dataplane(switch=switch, egress=lambda port_id, batch: left.extend((port_id, e) for e in batch))
    bursts = 8
    burst = small_config.output_queue_capacity // 2
    try:
        deadline = time.monotonic() + 10
        sent = 0
        # each burst fits the output queue; the next waits until egress took it
        for _ in range(bursts):
            queued = 0
            while queued < burst and time.monotonic() < deadline:
                if switch.ingress(0, udp_frame):
                    queued += 1
                else:
                    time.sleep(0.001)
            sent += queued
            while len(left) < sent and time.monotonic() < deadline:
                time.sleep(0.001)
    finally:
        handle.shutdown(drain=True, timeout=5)
    assert not handle.egress.is_alive()
    assert len(left) == bursts * burst > small_config.output_queue_capacity
    assert {port_id for port_id, _ in left} == {1}
    assert switch.ports[1].snapshot().tx_dropped == 0
    assert switch.conserved()


def test_dataplane_without_egress_leaves_output_queues(small_config, udp_frame):
    switch = Switch(small_config)
    switch.apply_flow_mod(forward(0, 1))
    handle = run_dataplane(switch=switch, egress=None)
    try:
        assert handle.egress is None
        switch.ingress(0, udp_frame)
        deadline = time.monotonic() + 5
        while switch.stats.forwarded < 1 and time.monotonic() < deadline:
            time.sleep(0.001)
    finally:
        handle.shutdown(drain=True, timeout=5)
    [egressed] = switch.ports[1].drain_output()
    assert egressed.data == udp_frame


def test_drain_egress_hands_batches_to_consumer(switch, udp_frame):
    switch.apply_flow_mod(forward(0, 2))
    _feed(switch, 0, [udp_frame] * 3)
    batches = []
    assert switch.drain_egress(lambda port_id, batch: batches.append((port_id, len(batch)))) == 3
    assert batches == [(2, 3)]
    assert switch.drain_egress() == 0


def test_sink_dir_records_capture_paths(tmp_path, small_config, udp_frame):
    directory = tmp_path / 'captures'
    switch = Switch(small_config.with_overrides(pcap_sink_dir=str(directory)))
    switch.apply_flow_mod(forward(0, 3))
    _feed(switch, 0, [udp_frame] * 2)
    switch.close()
    assert switch.capture_paths == [str(directory / f'port{i}.pcap') for i in range(4)]
    assert len(read_frames(switch.capture_paths[3])) == 2
    assert Switch(small_config).capture_paths == []
