"""
pcap replay into the switch
"""

from __future__ import annotations

from typing import Callable, Iterator, Mapping, Optional, Union

from src.storage.pcap import PcapReader, PcapRecord
from src.utils.logger import SwitchLogger

log = SwitchLogger(__name__, prefix='[replay] ')

PortMap = Union[Mapping[int, int], Callable[[PcapRecord], Optional[int]], None]


def _source_mac(record: PcapRecord):
    return int.from_bytes(record.data[6:12], 'big') if len(record.data) >= 12 else None


def pcap_replay(path, port_map: PortMap = None, default_port=0) -> Iterator[tuple[int, bytes]]:
    """
    Stream a capture as (ingress port, frame) pairs in file order

    Args:
        path: Classic pcap file (either byte order, micro or nano magic)
        port_map: Source MAC -> ingress port mapping, or a callable taking the
            record and returning a port (None falls back to default_port)
        default_port: Port for frames the map does not place

    Raises:
        PcapFormatError: bad magic or a truncated record (frames before it
            are still yielded)
    """
    with PcapReader(path) as reader:
        for record in reader:
            if callable(port_map):
                port = port_map(record)
            elif port_map:
                port = port_map.get(_source_mac(record))
            else:
                port = None
            yield (default_port if port is None else port), record.data


def _settle(switch, egress):
    # an output queue holds at most output_queue_capacity frames, so empty
    # them between bounded passes over the input queues
    step = max(1, switch.config.output_queue_capacity)
    while switch.drain(limit=step):
        switch.drain_egress(egress)
    switch.drain_egress(egress)


def replay_into(switch, source, batch=None, egress=None):
    """
    Feed frames through a switch synchronously

    The switch is drained whenever the target input queue fills, and the
    output queues are emptied alongside, so a replay never drops on ingress
    or egress and the counter totals depend only on the capture and the
    configuration.

    Args:
        switch: Switch (not running worker threads)
        source: Iterable of (port, frame)
        batch: Drain after this many frames (None = only when a queue fills)
        egress: Optional callable(port_id, [Egressed, ...]) given the frames
            leaving each port

    Returns:
        int: Frames offered
    """
    offered = 0
    for port, frame in source:
        if 0 <= port < len(switch.ports) and switch.ports[port].occupancy >= switch.ports[port].queue_capacity:
            _settle(switch, egress)
        switch.ingress(port, frame)
        offered += 1
        if batch and offered % batch == 0:
            _settle(switch, egress)
    _settle(switch, egress)
    log.info(f'replayed {offered:,} frame(s)')
    return offered
