"""
Switch core: ports, input arbiter, parser, flow pipeline, action engine
and the controller-bound notification path
"""

from __future__ import annotations

import os
import threading
import time
from typing import Optional

from src.extractors.header_extractor import parse
from src.models.errors import ConfigurationError, MessageError
from src.models.flow import FlowMod, FlowModCommand, MissPolicy, ResultKind
from src.models.frames import RawFrame
from src.models.statistics import DataplaneStats
from src.models.switch_config import SwitchConfig
from src.openflow.arbiter import OutboundQueue
from src.openflow.channel import FlowRemovedEvent, PacketInEvent, XidSource, notification_message
from src.openflow.constants import (
    OFP_NO_BUFFER,
    OFPCML_NO_BUFFER,
    OFPP_ANY,
    OFPP_CONTROLLER,
    OFPP_TABLE,
    OFPQ_ALL,
    BadRequestCode,
    ErrorType,
    PacketInReason,
)
from src.openflow.structs import OFPPort, OFPPortStats, OFPQueueStats
from src.processors.action_engine import ActionEngine, controller_max_len
from src.processors.flow_pipeline import FlowPipeline
from src.processors.packet_buffer import PacketBuffer
from src.processors.ternary_matcher import TernaryMatcher
from src.dataplane.input_arbiter import InputArbiter, arbitrate
from src.dataplane.ports import Port
from src.utils.logger import SwitchLogger

log = SwitchLogger(__name__, prefix='[dataplane] ')

NO_COOKIE = 0xFFFFFFFFFFFFFFFF
PORT_SPEED_KBPS = 10_000_000
OFPPS_LIVE = 1 << 2
_BUFFER_COMMANDS = (FlowModCommand.ADD, FlowModCommand.MODIFY, FlowModCommand.MODIFY_STRICT)


def _sink_path(directory, port_id):
    return os.path.join(directory, f'port{port_id}.pcap')


def _open_sinks(directory, port_count):
    from src.storage.pcap import PcapWriter

    os.makedirs(directory, exist_ok=True)
    return {i: PcapWriter(_sink_path(directory, i), nanosecond=True) for i in range(port_count)}


class Switch:
    """
    The switch fabric

    Args:
        config: SwitchConfig (validated here; ConfigurationError on problems)
        outbound: OutboundQueue for controller-bound messages
        xids: XidSource shared with the channel
        clock: Seconds clock for timeouts and buffer expiry
        matcher_factory: Matcher class for the flow tables
        sinks: Optional port index -> sink mapping (overrides PCAP_SINK_DIR)
    """

    def __init__(self, config: Optional[SwitchConfig] = None, outbound=None, xids=None,
                 clock=time.monotonic, matcher_factory=TernaryMatcher, sinks=None):
        self.config = (config or SwitchConfig()).validate()
        cfg = self.config
        self.clock = clock
        self.capture_paths = []
        if sinks is None and cfg.pcap_sink_dir:
            sinks = _open_sinks(cfg.pcap_sink_dir, cfg.port_count)
            self.capture_paths = [_sink_path(cfg.pcap_sink_dir, i) for i in sorted(sinks)]
        sinks = sinks or {}

        self.ports = [
            Port(i, cfg.queue_capacity, cfg.output_queue_capacity, sink=sinks.get(i))
            for i in range(cfg.port_count)
        ]
        self.arbiter = InputArbiter(cfg.port_count, cfg.arbiter_policy, cfg.effective_max_wait)
        self.pipeline = FlowPipeline(cfg.table_count, cfg.table_capacity, cfg.chunk_width,
                                     cfg.table_miss, matcher_factory, clock)
        self.engine = ActionEngine(cfg.port_count, PacketBuffer(cfg.buffer_capacity, cfg.buffer_ttl, clock))
        self.outbound = outbound if outbound is not None else OutboundQueue(cfg.packet_in_queue_limit)
        self.xids = xids or XidSource()
        self.stats = DataplaneStats()
        self.miss_send_len = cfg.miss_send_len
        self.config_flags = 0
        self.notify = self._enqueue_notification

        self._arbiter_lock = threading.Lock()
        self._work = threading.Condition()

    # -- ingress ----------------------------------------------------------------

    def ingress(self, port, data, arrived_at=None) -> bool:
        """
        Offer a frame to a port's input queue

        Returns:
            bool: True if accepted, False if dropped on a full queue

        Raises:
            ConfigurationError: unknown port
        """
        if not 0 <= port < len(self.ports):
            raise ConfigurationError(f'unknown port {port} (switch has {len(self.ports)})')
        accepted = self.ports[port].receive(data, arrived_at)
        if accepted:
            with self._work:
                self._work.notify()
        return accepted

    def wait_for_work(self, timeout):
        with self._work:
            if not any(port.occupancy for port in self.ports):
                self._work.wait(timeout)

    def arbitrate(self):
        """Dequeue the next frame chosen by the input arbiter, or None"""
        with self._arbiter_lock:
            return arbitrate(self.arbiter, self.ports)

    # -- processing -------------------------------------------------------------

    def process_frame(self, frame: RawFrame, now=None, count=True) -> str:
        """
        Parse, match and execute one frame

        Args:
            frame: RawFrame taken from an input queue (or re-injected)
            now: Seconds timestamp for flow bookkeeping
            count: Record the disposition in DataplaneStats (False for
                frames injected by Packet-Out)

        Returns:
            str: The frame's disposition ('buffered' for live buffer slots)
        """
        header = parse(frame)
        result = self.pipeline.process(header, len(frame.data), now)

        if result.kind == ResultKind.DROP_MALICIOUS:
            log.debug(f'port {frame.ingress_port}: malicious frame dropped ({", ".join(header.reasons)})')
            disposition = 'dropped_malicious'
        elif result.kind == ResultKind.MISS:
            if self.pipeline.miss_policy(result.table_id) == MissPolicy.CONTROLLER:
                disposition = self._to_controller(frame, PacketInReason.NO_MATCH, result.table_id,
                                                  NO_COOKIE, self.miss_send_len, allow_buffer=count)
            else:
                disposition = 'dropped_miss'
        else:
            egress = self.engine.execute(frame, result.action_set)
            return self._dispose(frame, egress, result.table_id, result.cookie,
                                 controller_max_len(result.action_set), count)

        if count and disposition != 'buffered':
            self.stats.add(disposition)
        return disposition

    def _dispose(self, frame, egress, table_id, cookie, max_len, count):
        physical = False
        disposition = None
        for port, data in egress:
            if port < len(self.ports):
                self.ports[port].transmit(data, frame.arrived_at)
                physical = True
            elif port == OFPP_CONTROLLER:
                copy = RawFrame(frame.ingress_port, data, frame.arrived_at)
                disposition = self._to_controller(copy, PacketInReason.ACTION, table_id, cookie,
                                                  max_len, allow_buffer=count and len(egress) == 1)
            elif port == OFPP_TABLE:
                # The re-processed frame records its own disposition
                return self.process_frame(RawFrame(frame.ingress_port, data, frame.arrived_at), count=count)

        if physical:
            disposition = 'forwarded'
        elif disposition is None:
            disposition = 'dropped_action'
        if count and disposition != 'buffered':
            self.stats.add(disposition)
        return disposition

    def _to_controller(self, frame, reason, table_id, cookie, max_len, allow_buffer=True):
        if max_len == OFPCML_NO_BUFFER or not allow_buffer:
            buffer_id, disposition = OFP_NO_BUFFER, 'to_controller'
            data = frame.data
        else:
            buffer_id = self.engine.buffer_for_controller(frame, table_id)
            data = frame.data[:max_len]
            if buffer_id is None:
                buffer_id, disposition = OFP_NO_BUFFER, 'dropped_buffer_full'
            else:
                disposition = 'buffered'

        event = PacketInEvent(frame, data, buffer_id, reason, table_id, cookie)
        if not self.notify(event):
            if buffer_id != OFP_NO_BUFFER:
                self.engine.buffer.take(buffer_id)
            log.debug(f'port {frame.ingress_port}: Packet-In queue full, frame dropped')
            return 'dropped_controller_queue'
        return disposition

    def _enqueue_notification(self, event) -> bool:
        return self.outbound.enqueue(notification_message(event, self.xids.next()))

    def step(self, now=None) -> bool:
        """Process one frame if any is waiting"""
        picked = self.arbitrate()
        if picked is None:
            return False
        self.process_frame(picked[1], now)
        return True

    def drain(self, limit=None, now=None) -> int:
        """Process frames until the input queues are empty (or limit reached)"""
        processed = 0
        while (limit is None or processed < limit) and self.step(now):
            processed += 1
        return processed

    def drain_egress(self, consumer=None) -> int:
        """
        Empty every port's output queue

        Args:
            consumer: Optional callable(port_id, [Egressed, ...]) given each
                non-empty batch

        Returns:
            int: Frames taken off the output queues
        """
        taken = 0
        for port in self.ports:
            batch = port.drain_output()
            if batch:
                taken += len(batch)
                if consumer is not None:
                    consumer(port.port_id, batch)
        return taken

    def housekeeping(self, now=None):
        """
        Expire flows and stale buffered frames

        Returns:
            tuple: (list of RemovedFlow, list of expired BufferedPacket)
        """
        removed = self.pipeline.expire_flows(now)
        for flow in removed:
            if flow.notify:
                self.notify(FlowRemovedEvent(flow))
        expired = self.engine.buffer.expire(now)
        if expired:
            self.stats.add('dropped_expired', len(expired))
            log.debug(f'{len(expired)} buffered frame(s) expired')
        return removed, expired

    # -- controller-driven operations -------------------------------------------

    def apply_flow_mod(self, mod: FlowMod, now=None):
        """
        Apply a FlowMod; a buffer_id re-injects that frame through the pipeline

        Returns:
            list: RemovedFlow descriptors
        """
        removed = self.pipeline.apply_flow_mod(mod, now)
        if mod.buffer_id != OFP_NO_BUFFER and mod.command in _BUFFER_COMMANDS:
            packet = self.engine.take(mod.buffer_id)
            self.stats.add_released()
            self.process_frame(packet.frame, now)
        return removed

    def packet_out(self, buffer_id, in_port, actions, data=b''):
        """
        Emit a buffered or controller-supplied frame

        Raises:
            BufferUnknownError: buffer_id is not live
        """
        actions = list(actions)
        if buffer_id != OFP_NO_BUFFER:
            packet = self.engine.take(buffer_id)
            self.stats.add_released()
            frame, count = packet.frame, True
        else:
            frame, count = RawFrame(in_port, bytes(data)), False
            self.stats.add_injected()
        egress = self.engine.execute(frame, actions)
        return self._dispose(frame, egress, 0, NO_COOKIE, controller_max_len(actions), count)

    # -- statistics -------------------------------------------------------------

    def _ports_for(self, port_no):
        if port_no == OFPP_ANY:
            return self.ports
        if not 0 <= port_no < len(self.ports):
            raise MessageError(ErrorType.BAD_REQUEST, BadRequestCode.BAD_PORT, f'no port {port_no}')
        return [self.ports[port_no]]

    def port_stats(self, port_no=OFPP_ANY):
        records = []
        for port in self._ports_for(port_no):
            c = port.snapshot()
            uptime = port.uptime()
            records.append(OFPPortStats(
                port_no=port.port_id, rx_packets=c.rx_packets, tx_packets=c.tx_packets,
                rx_bytes=c.rx_bytes, tx_bytes=c.tx_bytes, rx_dropped=c.rx_dropped,
                tx_dropped=c.tx_dropped, duration_sec=int(uptime),
                duration_nsec=int((uptime - int(uptime)) * 1e9),
            ))
        return records

    def queue_stats(self, port_no=OFPP_ANY, queue_id=OFPQ_ALL):
        """One FIFO output queue (id 0) per port"""
        if queue_id not in (0, OFPQ_ALL):
            return []
        records = []
        for port in self._ports_for(port_no):
            c = port.snapshot()
            uptime = port.uptime()
            records.append(OFPQueueStats(
                port_no=port.port_id, queue_id=0, tx_bytes=c.tx_bytes, tx_packets=c.tx_packets,
                tx_errors=c.tx_dropped, duration_sec=int(uptime),
                duration_nsec=int((uptime - int(uptime)) * 1e9),
            ))
        return records

    def port_descriptions(self):
        return [
            OFPPort(port_no=p.port_id, hw_addr=p.hw_addr, name=p.name, state=OFPPS_LIVE,
                    curr_speed=PORT_SPEED_KBPS, max_speed=PORT_SPEED_KBPS)
            for p in self.ports
        ]

    def port_counters(self):
        return [port.snapshot() for port in self.ports]

    def conservation(self):
        """
        Terms of the frame conservation identity

        Returns:
            dict: port totals, queue/buffer gauges and disposition counters
        """
        counters = self.port_counters()
        dispositions = self.stats.to_dict()
        terms = {
            'rx_packets': sum(c.rx_packets for c in counters),
            'rx_dropped': sum(c.rx_dropped for c in counters),
            'tx_packets': sum(c.tx_packets for c in counters),
            'tx_dropped': sum(c.tx_dropped for c in counters),
            'in_queue': sum(p.occupancy for p in self.ports),
            'buffered_live': len(self.engine.buffer),
            'settled': self.stats.settled(),
            'delivered_to_controller': dispositions['to_controller'],
            'dropped_by_pipeline': sum(
                dispositions[name] for name in dispositions
                if name.startswith('dropped_')
            ),
        }
        terms['forwarded'] = dispositions['forwarded']
        return terms

    def conserved(self):
        """rx = rx_dropped + queued + buffered + settled, exact at any quiescent point"""
        t = self.conservation()
        return t['rx_packets'] == t['rx_dropped'] + t['in_queue'] + t['buffered_live'] + t['settled']

    def close(self):
        for port in self.ports:
            port.close()


class SwitchHandle:
    """
    A running dataplane

    Attributes:
        switch: The Switch being driven
        workers: Worker threads
        egress: Output-queue consumer thread (None when egress is left to the caller)
    """

    def __init__(self, switch, workers, stop, abandon, egress=None, egress_stop=None):
        self.switch = switch
        self.workers = workers
        self.egress = egress
        self._stop = stop
        self._abandon = abandon
        self._egress_stop = egress_stop

    @property
    def running(self):
        return any(w.is_alive() for w in self.workers)

    def shutdown(self, drain=True, timeout=None):
        """
        Stop the workers, then the egress consumer

        Args:
            drain: Finish frames already queued before stopping
            timeout: Seconds to wait for each thread
        """
        if not drain:
            self._abandon.set()
        self._stop.set()
        with self.switch._work:
            self.switch._work.notify_all()
        for worker in self.workers:
            worker.join(timeout)
        if self.egress is not None:
            self._egress_stop.set()
            self.egress.join(timeout)
        self.switch.close()
        log.info('dataplane stopped')


def discard_egress(port_id, batch):
    """Egress consumer that lets frames leave (the sinks already hold them)"""


def _worker_loop(switch, stop, abandon, housekeeper, interval):
    next_housekeeping = time.monotonic() + interval
    while not abandon.is_set():
        processed = switch.step()
        if housekeeper and time.monotonic() >= next_housekeeping:
            switch.housekeeping()
            next_housekeeping = time.monotonic() + interval
        if not processed:
            if stop.is_set():
                return
            switch.wait_for_work(0.05)


def _egress_loop(switch, consumer, stop, interval):
    while not stop.is_set():
        if not switch.drain_egress(consumer):
            stop.wait(interval)
    switch.drain_egress(consumer)


def run_dataplane(config: Optional[SwitchConfig] = None, switch=None, housekeeping_interval=1.0,
                  egress=discard_egress, egress_interval=0.001) -> SwitchHandle:
    """
    Start dataplane workers and the egress consumer

    Args:
        config: SwitchConfig (ignored when switch is given)
        switch: An already built Switch
        housekeeping_interval: Seconds between flow/buffer expiry passes
        egress: callable(port_id, [Egressed, ...]) fed from every output
            queue; None leaves the output queues to the caller
        egress_interval: Seconds the egress thread idles when nothing is queued

    Returns:
        SwitchHandle

    Raises:
        ConfigurationError: invalid configuration
    """
    switch = switch or Switch(config)
    stop, abandon = threading.Event(), threading.Event()
    workers = [
        threading.Thread(
            target=_worker_loop,
            args=(switch, stop, abandon, index == 0, housekeeping_interval),
            name=f'dataplane-{index}',
            daemon=True,
        )
        for index in range(switch.config.workers)
    ]
    egress_thread = egress_stop = None
    if egress is not None:
        egress_stop = threading.Event()
        egress_thread = threading.Thread(
            target=_egress_loop, args=(switch, egress, egress_stop, egress_interval),
            name='dataplane-egress', daemon=True,
        )
        egress_thread.start()
    for worker in workers:
        worker.start()
    log.info(f'dataplane running: {switch.config.port_count} ports, {switch.config.table_count} tables, '
             f'{switch.config.workers} worker(s)')
    return SwitchHandle(switch, workers, stop, abandon, egress_thread, egress_stop)
