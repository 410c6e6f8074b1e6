"""
Scripted OpenFlow controller peer for integration tests and smoke runs
"""

from __future__ import annotations

import itertools
import socket
import time
from collections import deque
from dataclasses import dataclass, replace
from typing import Callable, Optional

from src.models.errors import ScriptTimeoutError
from src.openflow import messages as ofm
from src.openflow.transport import MessageStream
from src.utils.logger import SwitchLogger

log = SwitchLogger(__name__, prefix='[mock-controller] ')

Predicate = Callable[[ofm.OfpMessage], bool]


def expect_type(cls, **attrs) -> Predicate:
    """Predicate matching a message class and attribute values"""
    def predicate(msg):
        return isinstance(msg, cls) and all(getattr(msg, k) == v for k, v in attrs.items())
    predicate.__name__ = f'expect_{cls.__name__}'
    return predicate


@dataclass
class Step:
    """
    One script step

    Attributes:
        send: Messages sent when the step starts
        expect: Predicate the step waits for (None = do not wait)
        respond: Builds replies from the matched message
        timeout: Seconds to wait for a match
    """

    send: tuple = ()
    expect: Optional[Predicate] = None
    respond: Optional[Callable[[ofm.OfpMessage], list]] = None
    timeout: float = 5.0


class MockController:
    """
    Minimal controller: handshake, scripted exchanges, full transcript

    Args:
        timeout: Default wait for expected messages
        answer_echo: Reply to EchoRequests automatically

    Attributes:
        transcript: ('sent' | 'recv', message) pairs in wire order
        features: The FeaturesReply from the handshake
    """

    def __init__(self, timeout=5.0, answer_echo=True):
        self.timeout = timeout
        self.answer_echo = answer_echo
        self.transcript = []
        self.features = None
        self.stream: Optional[MessageStream] = None
        self._server = None
        self._inbox = deque()
        self._xids = itertools.count(0x1000)
        self._step = 0

    # -- connection ---------------------------------------------------------------

    def connect(self, host, port):
        """Connect to a switch listening in passive mode"""
        self.stream = MessageStream(socket.create_connection((host, port), timeout=self.timeout))
        log.info(f'connected to switch at {host}:{port}')
        return self

    def listen(self, host='127.0.0.1', port=0):
        """
        Open a listening socket for a switch in active mode

        Returns:
            int: Bound port
        """
        self._server = socket.create_server((host, port))
        return self._server.getsockname()[1]

    def accept(self, timeout=None):
        self._server.settimeout(timeout or self.timeout)
        try:
            sock, _ = self._server.accept()
        except socket.timeout:
            raise ScriptTimeoutError(self._step, self.transcript) from None
        self.stream = MessageStream(sock)
        return self

    def close(self):
        if self.stream is not None:
            self.stream.close()
        if self._server is not None:
            self._server.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- messaging ----------------------------------------------------------------

    def next_xid(self):
        return next(self._xids)

    def _with_xid(self, msg):
        return msg if msg.xid else replace(msg, xid=self.next_xid())

    def send(self, msg: ofm.OfpMessage):
        self.transcript.append(('sent', msg))
        self.stream.send(msg)

    def _receive(self, deadline):
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            raise ScriptTimeoutError(self._step, self.transcript)
        self.stream.sock.settimeout(remaining)
        try:
            raw = self.stream.read_message()
        except socket.timeout:
            raise ScriptTimeoutError(self._step, self.transcript) from None
        if raw is None:
            raise ConnectionError('switch closed the connection')
        msg = ofm.decode(raw)
        self.transcript.append(('recv', msg))
        if self.answer_echo and isinstance(msg, ofm.OFPEchoRequest):
            self.send(ofm.OFPEchoReply(xid=msg.xid, data=msg.data))
        return msg

    def expect(self, predicate: Predicate, timeout=None) -> ofm.OfpMessage:
        """
        Wait for the first message satisfying predicate

        Messages that do not match stay queued for later expectations.

        Raises:
            ScriptTimeoutError: nothing matched in time (carries the transcript)
        """
        for msg in list(self._inbox):
            if predicate(msg):
                self._inbox.remove(msg)
                return msg
        deadline = time.monotonic() + (timeout or self.timeout)
        while True:
            msg = self._receive(deadline)
            if predicate(msg):
                return msg
            self._inbox.append(msg)

    def request(self, msg: ofm.OfpMessage, reply_cls, timeout=None):
        """Send a request and wait for the reply with the same xid"""
        msg = self._with_xid(msg)
        self.send(msg)
        return self.expect(lambda m: isinstance(m, (reply_cls, ofm.OFPErrorMsg)) and m.xid == msg.xid, timeout)

    def request_all(self, msg: ofm.OFPMultipartRequest, timeout=None):
        """Send a multipart request and collect every reply part"""
        msg = self._with_xid(msg)
        self.send(msg)
        parts = []
        while True:
            reply = self.expect(lambda m: isinstance(m, (ofm.OFPMultipartReply, ofm.OFPErrorMsg))
                                and m.xid == msg.xid, timeout)
            parts.append(reply)
            if isinstance(reply, ofm.OFPErrorMsg) or not reply.more:
                return parts

    def barrier(self, timeout=None):
        """Round-trip a barrier so every earlier message has been processed"""
        return self.request(ofm.OFPBarrierRequest(), ofm.OFPBarrierReply, timeout)

    def handshake(self, timeout=None):
        """
        Hello exchange plus FeaturesRequest

        Returns:
            OFPFeaturesReply
        """
        self.send(ofm.OFPHello.with_versions(self.next_xid()))
        self.expect(expect_type(ofm.OFPHello), timeout)
        self.features = self.request(ofm.OFPFeaturesRequest(), ofm.OFPFeaturesReply, timeout)
        log.success(f'handshake complete, datapath {self.features.datapath_id:#x}')
        return self.features

    def run(self, script) -> list:
        """
        Execute script steps in order

        Returns:
            list: The matched message of every step (None for steps that do not wait)

        Raises:
            ScriptTimeoutError: a step's expectation timed out
        """
        matched = []
        for index, step in enumerate(script):
            self._step = index
            for msg in step.send:
                self.send(self._with_xid(msg))
            if step.expect is None:
                matched.append(None)
                continue
            msg = self.expect(step.expect, step.timeout)
            matched.append(msg)
            if step.respond is not None:
                for reply in step.respond(msg):
                    self.send(reply)
        return matched

    def received(self, cls=None):
        """Every received message, optionally filtered by class"""
        return [m for d, m in self.transcript if d == 'recv' and (cls is None or isinstance(m, cls))]
