"""
Controller transport: message framing over sockets and connect backoff
"""

import socket

import pytest

from src.models.errors import FramingError
from src.openflow import messages as ofm
from src.openflow.transport import MessageStream, connect
from src.utils.retry import calculate_backoff


class FixedRandom:
    def __init__(self, value):
        self.value = value

    def random(self):
        return self.value


class TestBackoff:
    @pytest.mark.parametrize('attempt, expected', [(0, 1.0), (1, 2.0), (3, 8.0)])
    def test_doubles_per_attempt(self, attempt, expected):
        assert calculate_backoff(attempt, rng=FixedRandom(0.5)) == pytest.approx(expected)

    def test_jitter_bounds(self):
        assert calculate_backoff(2, rng=FixedRandom(0.0)) == pytest.approx(3.0)
        assert calculate_backoff(2, rng=FixedRandom(1.0)) == pytest.approx(5.0)

    def test_cap_applies_before_jitter(self):
        assert calculate_backoff(10, initial_backoff=1, max_backoff=30, rng=FixedRandom(0.5)) == pytest.approx(30)


def _unused_port():
    with socket.socket() as sock:
        sock.bind(('127.0.0.1', 0))
        return sock.getsockname()[1]


def test_connect_gives_up_after_retries():
    waits = []
    with pytest.raises(OSError):
        connect('127.0.0.1', _unused_port(), max_retries=2, initial_backoff=0.01, timeout=1.0,
                sleep=waits.append)
    assert len(waits) == 2
    assert 0.0075 <= waits[0] <= 0.0125
    assert 0.015 <= waits[1] <= 0.025


def test_connect_succeeds_first_try():
    with socket.create_server(('127.0.0.1', 0)) as server:
        sock = connect('127.0.0.1', server.getsockname()[1], sleep=pytest.fail)
        sock.close()


@pytest.fixture
def pair():
    left, right = socket.socketpair()
    yield left, MessageStream(right)
    left.close()


class TestMessageStream:
    def test_reassembles_split_messages(self, pair):
        peer, stream = pair
        echo = ofm.encode(ofm.OFPEchoRequest(xid=7, data=b'abcdefgh'))
        barrier = ofm.encode(ofm.OFPBarrierRequest(xid=8))
        peer.sendall(echo + barrier[:5])
        assert ofm.decode(stream.read_message()).xid == 7
        peer.sendall(barrier[5:])
        assert ofm.decode(stream.read_message()).xid == 8

    def test_clean_close(self, pair):
        peer, stream = pair
        peer.sendall(ofm.encode(ofm.OFPBarrierRequest(xid=1)))
        peer.shutdown(socket.SHUT_WR)
        assert stream.read_message() is not None
        assert stream.read_message() is None

    def test_close_mid_message(self, pair):
        peer, stream = pair
        peer.sendall(ofm.encode(ofm.OFPEchoRequest(xid=2, data=b'12345678'))[:10])
        peer.shutdown(socket.SHUT_WR)
        with pytest.raises(FramingError):
            stream.read_message()

    def test_send_writes_encoded_bytes(self, pair):
        peer, stream = pair
        stream.send(ofm.OFPBarrierReply(xid=3))
        assert peer.recv(64) == ofm.encode(ofm.OFPBarrierReply(xid=3))
