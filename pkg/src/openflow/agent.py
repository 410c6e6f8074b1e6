"""
OpenFlow agent: drives an OpenFlowChannel over a controller connection

One reader thread feeds controller messages to the channel in arrival
order, a writer thread drains the OutboundQueue in arbiter order and a
ticker thread delivers keep-alive timer events.
"""

import socket
import threading
import time
from typing import Optional

from src.models.errors import EncodingError, FramingError, MessageError
from src.openflow.channel import ChannelState, Malformed, OpenFlowChannel, Received, Timer
from src.openflow.messages import decode
from src.openflow.transport import MessageStream, connect, listen
from src.utils.logger import SwitchLogger

log = SwitchLogger(__name__, prefix='[agent] ')


class OpenFlowAgent:
    """
    Southbound agent for one Switch

    Args:
        switch: The Switch (its outbound queue and xid source are shared)
        host: Controller address (active) or bind address (passive)
        port: Controller port (active) or listen port (passive, 0 = ephemeral)
        mode: 'active' connects out, 'passive' accepts the controller
        timer_interval: Seconds between timer events
    """

    def __init__(self, switch, host=None, port=None, mode=None, timer_interval=1.0):
        cfg = switch.config
        self.switch = switch
        self.host = host or cfg.controller_host
        self.port = cfg.controller_port if port is None else port
        self.mode = mode or cfg.connection_mode
        self.timer_interval = timer_interval
        self.channel: Optional[OpenFlowChannel] = None
        self.sessions = 0
        self.negotiated = threading.Event()

        self._stop = threading.Event()
        self._thread = None
        self._stream = None
        self._server = None
        self._bound = threading.Event()

    @property
    def bound_port(self):
        """Listen port in passive mode (waits until the socket is bound)"""
        self._bound.wait(5.0)
        return self._server.getsockname()[1] if self._server else None

    # -- lifecycle ------------------------------------------------------------

    def start(self):
        self._thread = threading.Thread(target=self.run, name='of-agent', daemon=True)
        self._thread.start()
        return self

    def stop(self, timeout=5.0):
        self._stop.set()
        if self._stream is not None:
            self._stream.close()
        if self._server is not None:
            self._server.close()
        if self._thread is not None:
            self._thread.join(timeout)
        log.info('agent stopped')

    def run(self):
        """Serve controller connections until stop()"""
        if self.mode == 'passive':
            self._run_passive()
        else:
            self._run_active()

    def _run_active(self):
        cfg = self.switch.config
        while not self._stop.is_set():
            try:
                sock = connect(self.host, self.port, cfg.max_retries, cfg.initial_backoff)
            except OSError:
                return
            self.serve(sock)
            if not self._stop.is_set():
                log.warning('controller connection lost, reconnecting')

    def _run_passive(self):
        self._server = listen(self.host, self.port)
        self._server.settimeout(0.5)
        self._bound.set()
        while not self._stop.is_set():
            try:
                sock, peer = self._server.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            sock.settimeout(None)
            log.success(f'controller connected from {peer[0]}:{peer[1]}')
            self.serve(sock)

    # -- one connection ---------------------------------------------------------

    def serve(self, sock):
        """
        Run the channel over a connected socket until either side closes
        """
        self.sessions += 1
        self.negotiated.clear()
        stream = self._stream = MessageStream(sock)
        channel = self.channel = OpenFlowChannel(
            self.switch, self.switch.xids, self.switch.config.echo_interval, self.switch.config.echo_max_missed)

        stale = self.switch.outbound.drain()
        if stale:
            log.info(f'discarded {len(stale)} message(s) queued for a previous connection')

        step_lock = threading.Lock()
        send_lock = threading.Lock()
        done = threading.Event()

        def route(messages):
            for msg in messages:
                if channel.state == ChannelState.NEGOTIATED:
                    self.switch.outbound.enqueue(msg)
                else:
                    with send_lock:
                        stream.send(msg)

        def writer():
            while not done.is_set() and not self.negotiated.wait(0.2):
                pass
            while not done.is_set():
                msg = self.switch.outbound.dequeue(timeout=0.2)
                if msg is None:
                    continue
                try:
                    with send_lock:
                        stream.send(msg)
                except (OSError, EncodingError) as e:
                    log.warning(f'send failed: {e}')
                    done.set()

        def ticker():
            while not done.wait(self.timer_interval):
                with step_lock:
                    out = channel.step(Timer(time.monotonic()))
                route(out)
                if channel.state == ChannelState.CLOSED:
                    log.warning('keep-alive timeout, dropping controller connection')
                    done.set()
                    stream.close()

        threads = [
            threading.Thread(target=writer, name='of-writer', daemon=True),
            threading.Thread(target=ticker, name='of-ticker', daemon=True),
        ]
        for thread in threads:
            thread.start()

        try:
            with step_lock:
                route(channel.start())
            while not done.is_set() and not self._stop.is_set():
                raw = stream.read_message()
                if raw is None:
                    log.info('controller closed the connection')
                    break
                try:
                    event = Received(decode(raw))
                except MessageError as e:
                    self.switch.stats.add_error(e)
                    event = Malformed(e)
                with step_lock:
                    out = channel.step(event)
                    if channel.state == ChannelState.NEGOTIATED:
                        self.negotiated.set()
                route(out)
                if channel.state == ChannelState.CLOSED:
                    break
        except FramingError as e:
            self.switch.stats.add_error(e)
            log.error(f'framing error, closing connection: {e}')
        except OSError as e:
            if not done.is_set() and not self._stop.is_set():
                log.warning(f'connection error: {e}')
        finally:
            done.set()
            channel.close()
            for thread in threads:
                thread.join(2.0)
            stream.close()
            self.negotiated.clear()
