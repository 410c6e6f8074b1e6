"""
Input arbiter and the outbound channel arbiter
"""

import threading

import pytest

from src.dataplane.input_arbiter import InputArbiter, arbitrate
from src.dataplane.ports import Port
from src.openflow import messages as ofm
from src.openflow.arbiter import OutboundQueue, OutputClass, arbiter_dequeue, classify


class TestInputArbiter:
    def test_longest_queue_wins(self):
        arbiter = InputArbiter(3)
        arbiter.last_served = 0
        assert arbiter.select([5, 9, 9]) == 1
        assert arbiter.select([5, 9, 9]) == 2

    def test_empty_queues(self):
        assert InputArbiter(4).select([0, 0, 0, 0]) is None

    def test_round_robin_policy_ignores_occupancy(self):
        arbiter = InputArbiter(3, policy='round-robin')
        picks = [arbiter.select([1, 50, 1]) for _ in range(6)]
        assert picks == [0, 1, 2, 0, 1, 2]

    def test_round_robin_skips_empty_ports(self):
        arbiter = InputArbiter(4, policy='round-robin')
        assert [arbiter.select([3, 0, 0, 3]) for _ in range(4)] == [0, 3, 0, 3]

    def test_bounded_waiting_serves_starving_port(self):
        arbiter = InputArbiter(3, max_wait=2)
        assert [arbiter.select([1, 10, 10]) for _ in range(3)] == [1, 2, 0]

    def test_without_guard_a_short_queue_starves(self):
        arbiter = InputArbiter(3, max_wait=0)
        picks = [arbiter.select([1, 10, 10]) for _ in range(20)]
        assert 0 not in picks

    def test_equal_load_is_served_equally(self):
        arbiter = InputArbiter(4)
        for _ in range(400):
            arbiter.select([7, 7, 7, 7])
        assert arbiter.served == [100, 100, 100, 100]

    def test_unknown_policy(self):
        with pytest.raises(ValueError):
            InputArbiter(2, policy='random')

    def test_arbitrate_pops_chosen_port(self):
        ports = [Port(i, queue_capacity=8) for i in range(3)]
        ports[2].receive(b'a')
        ports[2].receive(b'b')
        ports[0].receive(b'c')
        arbiter = InputArbiter(3)
        port, frame = arbitrate(arbiter, ports)
        assert (port, frame.data, frame.ingress_port) == (2, b'a', 2)
        assert ports[2].occupancy == 1
        assert arbitrate(arbiter, ports)[0] == 0
        assert arbitrate(arbiter, ports)[0] == 2
        assert arbitrate(arbiter, ports) is None


def _packet_in(xid):
    return ofm.OFPPacketIn(xid=xid, data=b'x')


class TestOutboundQueue:
    def test_classes(self):
        assert classify(_packet_in(1)) == OutputClass.PACKET_IN
        assert classify(ofm.OFPMultipartReply()) == OutputClass.STATISTICS
        assert classify(ofm.OFPFlowRemoved()) == OutputClass.STATISTICS
        assert classify(ofm.OFPFeaturesReply()) == OutputClass.SWITCH_INFO_CONFIG
        assert classify(ofm.OFPErrorMsg()) == OutputClass.SWITCH_INFO_CONFIG
        assert classify(ofm.OFPBarrierReply()) == OutputClass.SWITCH_INFO_CONFIG
        assert classify(ofm.OFPEchoRequest()) == OutputClass.CHANNEL_KEEPALIVE
        assert classify(ofm.OFPHello()) == OutputClass.CHANNEL_KEEPALIVE

    def test_strict_priority_then_fifo(self):
        queue = OutboundQueue()
        queue.extend([
            ofm.OFPEchoRequest(xid=1),
            ofm.OFPFeaturesReply(xid=2),
            ofm.OFPFlowRemoved(xid=3),
            _packet_in(4),
            ofm.OFPBarrierReply(xid=5),
            _packet_in(6),
        ])
        assert [m.xid for m in queue.drain()] == [4, 6, 3, 2, 5, 1]
        assert len(queue) == 0

    def test_packet_in_limit(self):
        queue = OutboundQueue(packet_in_limit=2)
        assert queue.enqueue(_packet_in(1))
        assert queue.enqueue(_packet_in(2))
        assert not queue.enqueue(_packet_in(3))
        assert queue.enqueue(ofm.OFPEchoRequest(xid=4))
        assert queue.depth(OutputClass.PACKET_IN) == 2
        assert queue.depth() == 3

    def test_dequeue_on_empty(self):
        queue = OutboundQueue()
        assert queue.dequeue() is None
        assert arbiter_dequeue(queue) is None
        assert queue.dequeue(timeout=0.01) is None

    def test_dequeue_wakes_on_enqueue(self):
        queue = OutboundQueue()
        threading.Timer(0.05, queue.enqueue, args=(ofm.OFPEchoReply(xid=9),)).start()
        msg = queue.dequeue(timeout=5)
        assert msg is not None and msg.xid == 9

    def test_arbiter_dequeue_follows_priority(self):
        queue = OutboundQueue()
        queue.extend([ofm.OFPEchoReply(xid=1), ofm.OFPMultipartReply(xid=2), _packet_in(3)])
        order = []
        while (msg := arbiter_dequeue(queue)) is not None:
            order.append(msg.xid)
        assert order == [3, 2, 1]
