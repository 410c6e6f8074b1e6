"""
Stream-socket transport for OpenFlow messages

Framing relies only on the header length field.
"""

import socket
import time
from collections import deque
from typing import Optional

from src.models.errors import FramingError
from src.openflow.messages import OfpMessage, decode_stream, encode
from src.utils.logger import SwitchLogger
from src.utils.retry import calculate_backoff

log = SwitchLogger(__name__, prefix='[transport] ')

RECV_SIZE = 65536
MAX_BACKOFF = 30.0


class MessageStream:
    """
    Message-at-a-time reader/writer over a connected socket

    Args:
        sock: Connected stream socket
    """

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self._buffer = b''
        self._pending = deque()

    def read_message(self) -> Optional[bytes]:
        """
        Next complete message as raw bytes

        Returns:
            bytes, or None when the peer closed the connection cleanly

        Raises:
            FramingError: bad length field or the peer closed mid-message
            TimeoutError: the socket timeout elapsed
        """
        while not self._pending:
            data = self.sock.recv(RECV_SIZE)
            if not data:
                if self._buffer:
                    raise FramingError(f'connection closed with {len(self._buffer)} bytes of a partial message')
                return None
            frames, self._buffer = decode_stream(self._buffer + data)
            self._pending.extend(frames)
        return self._pending.popleft()

    def send(self, msg: OfpMessage):
        self.sock.sendall(encode(msg))

    def send_raw(self, data: bytes):
        self.sock.sendall(data)

    def close(self):
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


def connect(host, port, max_retries=5, initial_backoff=1.0, timeout=10.0, sleep=time.sleep):
    """
    Connect to a controller, retrying with exponential backoff

    Args:
        host: Controller address
        port: Controller TCP port
        max_retries: Retries after the first attempt
        initial_backoff: Base backoff in seconds
        timeout: Per-attempt connect timeout
        sleep: Sleep function (injectable for tests)

    Returns:
        socket.socket: Connected socket in blocking mode

    Raises:
        OSError: every attempt failed
    """
    for attempt in range(max_retries + 1):
        try:
            sock = socket.create_connection((host, port), timeout=timeout)
            sock.settimeout(None)
            log.success(f'connected to controller {host}:{port}')
            return sock
        except OSError as e:
            if attempt == max_retries:
                log.error(f'controller {host}:{port} unreachable after {max_retries + 1} attempts: {e}')
                raise
            wait_time = calculate_backoff(attempt, initial_backoff, MAX_BACKOFF)
            log.warning(f'connect to {host}:{port} failed ({e}) - '
                        f'retry {attempt + 1}/{max_retries}, waiting {wait_time:.1f}s...')
            sleep(wait_time)


def listen(host, port, backlog=1):
    """Listening socket for passive mode (controller connects to the switch)"""
    server = socket.create_server((host, port), backlog=backlog)
    log.info(f'listening for a controller on {host}:{server.getsockname()[1]}')
    return server
