"""
Deterministic traffic generation

A TrafficSpec lists flows; generate() interleaves their frames in an order
fixed by the seed. Duplicators replicate a flow's frames onto extra
ingress ports.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from src.harness.frame_builder import MAX_FRAME, MIN_FRAME, FrameTemplate, build_frame, header_length
from src.extractors.header_extractor import IP_PROTO_TCP, IP_PROTO_UDP
from src.utils.validators import validate_frame_size


@dataclass(frozen=True)
class FlowSpec:
    """
    One generated flow

    Attributes:
        template: Header values of every frame in the flow
        packet_count: Frames per ingress port
        frame_size: Frame length in bytes
        ingress_port: Port the frames arrive on
        egress_port: Port the benchmark flow entry outputs to (None = next port)
        duplicates: Extra ingress ports that receive a copy of every frame
    """

    template: FrameTemplate = field(default_factory=FrameTemplate)
    packet_count: int = 1
    frame_size: int = MIN_FRAME
    ingress_port: int = 0
    egress_port: Optional[int] = None
    duplicates: tuple[int, ...] = ()

    @property
    def ingress_ports(self):
        return (self.ingress_port,) + tuple(self.duplicates)

    def frame(self):
        return build_frame(self.template, self.frame_size)


@dataclass(frozen=True)
class TrafficSpec:
    """
    Attributes:
        flows: Flows to generate
        seed: Interleaving seed
        rate: Offered packets per second (None = unlimited)
    """

    flows: tuple[FlowSpec, ...] = ()
    seed: int = 0
    rate: Optional[float] = None

    def __post_init__(self):
        for flow in self.flows:
            ok, error = validate_frame_size(flow.frame_size, MIN_FRAME, MAX_FRAME)
            if not ok:
                raise ValueError(error)
            headers = header_length(flow.template)
            if flow.frame_size < headers:
                raise ValueError(f'{flow.frame_size}-byte frames cannot hold the {headers}-byte header stack')
            if flow.packet_count < 0:
                raise ValueError(f'negative packet count {flow.packet_count}')
        if self.rate is not None and self.rate <= 0:
            raise ValueError(f'rate must be positive (got {self.rate})')

    @property
    def total_packets(self):
        return sum(flow.packet_count * len(flow.ingress_ports) for flow in self.flows)


def generate(spec: TrafficSpec) -> Iterator[tuple[int, bytes]]:
    """
    Yield (ingress port, frame) pairs

    Frames of one flow keep their relative order; the interleaving across
    flows is a seeded permutation.
    """
    if not spec.flows:
        return
    frames = [flow.frame() for flow in spec.flows]
    schedule = np.repeat(np.arange(len(spec.flows)), [f.packet_count for f in spec.flows])
    np.random.default_rng(spec.seed).shuffle(schedule)
    for index in schedule:
        flow = spec.flows[index]
        for port in flow.ingress_ports:
            yield port, frames[index]


def uniform_spec(flow_count, packets_per_flow, frame_size=MIN_FRAME, port_count=8, seed=0,
                 rate=None, protocol=IP_PROTO_UDP, duplicates=0):
    """
    Flows with distinct random destinations spread round-robin over ports

    Args:
        flow_count: Number of flows
        packets_per_flow: Frames per flow
        frame_size: Bytes per frame
        port_count: Switch ports to spread ingress over
        seed: Seed for addresses and interleaving
        rate: Offered packets per second
        protocol: IP_PROTO_UDP or IP_PROTO_TCP
        duplicates: Extra ingress ports per flow (packet duplicators)

    Returns:
        TrafficSpec
    """
    rng = np.random.default_rng(seed)
    destinations = rng.choice(1 << 24, size=flow_count, replace=False) if flow_count else []
    ports = rng.integers(1024, 65536, size=(flow_count, 2))
    flows = []
    for i in range(flow_count):
        ingress = i % port_count
        template = FrameTemplate(
            ipv4_dst=0x0A000000 | int(destinations[i]),
            ip_proto=protocol if protocol in (IP_PROTO_TCP, IP_PROTO_UDP) else IP_PROTO_UDP,
            l4_src=int(ports[i][0]), l4_dst=int(ports[i][1]),
        )
        extra = tuple((ingress + k) % port_count for k in range(1, duplicates + 1)
                      if (ingress + k) % port_count != ingress)
        flows.append(FlowSpec(template, packets_per_flow, frame_size, ingress,
                              (ingress + 1) % port_count, extra))
    return TrafficSpec(tuple(flows), seed, rate)


class Pacer:
    """
    Spaces emissions at a fixed rate

    Args:
        rate: Packets per second (None = no pacing)
        clock: Seconds clock
        sleep: Sleep function
    """

    def __init__(self, rate=None, clock=time.perf_counter, sleep=time.sleep):
        self.rate = rate
        self.clock = clock
        self.sleep = sleep
        self.start = None

    def wait(self, index):
        """Block until packet number index may be sent"""
        if self.rate is None:
            return
        if self.start is None:
            self.start = self.clock()
        delay = self.start + index / self.rate - self.clock()
        if delay > 0:
            self.sleep(delay)
