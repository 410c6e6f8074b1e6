"""
Benchmark runner: generated traffic through a running dataplane
"""

from __future__ import annotations

import os
import time
from typing import Optional

import numpy as np

from src.dataplane.switch import Switch, run_dataplane
from src.harness.traffic import FlowSpec, Pacer, TrafficSpec, generate
from src.models.actions import Action
from src.models.flow import FlowMod, FlowModCommand, InstructionSet, MatchField
from src.models.statistics import DISPOSITIONS, BenchmarkReport
from src.models.switch_config import SwitchConfig
from src.utils.logger import SwitchLogger

log = SwitchLogger(__name__, prefix='[bench] ')

QUIESCE_POLL = 0.01


def flow_entry_for(flow: FlowSpec, port_count, priority=100) -> FlowMod:
    """
    Exact-match entry forwarding a generated flow to its egress port

    Duplicated flows arrive on several ports, so their entry leaves in_port
    wildcarded.
    """
    t = flow.template
    egress = flow.egress_port if flow.egress_port is not None else (flow.ingress_port + 1) % port_count
    match = [] if flow.duplicates else [MatchField('in_port', flow.ingress_port)]
    if t.ipv4_src is not None and not t.mpls_labels:
        match += [MatchField('eth_type', 0x0800), MatchField('ipv4_dst', t.ipv4_dst)]
    else:
        match += [MatchField('eth_dst', t.eth_dst)]
    return FlowMod(
        command=FlowModCommand.ADD,
        match=tuple(match),
        priority=priority,
        instructions=InstructionSet(write_actions=(Action.output(egress),)),
    )


class _LatencyRecorder:
    """Egress consumer keeping ingress-to-egress latencies"""

    def __init__(self):
        self.latencies_ns = []

    def __call__(self, port_id, batch):
        self.latencies_ns.extend(egressed.departed_at - egressed.arrived_at for egressed in batch)


def _quiesced(switch):
    t = switch.conservation()
    return t['in_queue'] == 0 and t['rx_packets'] == t['rx_dropped'] + t['buffered_live'] + t['settled']


def run_benchmark(spec: TrafficSpec, config: Optional[SwitchConfig] = None, switch=None,
                  install_flows=True, backpressure=True, timeout=None):
    """
    Drive generated traffic through the dataplane and measure it

    Args:
        spec: Traffic to offer
        config: Switch configuration (ignored when switch is given)
        switch: Pre-built Switch (flows may already be installed)
        install_flows: Install one exact-match entry per generated flow
        backpressure: Hold the generator while an input queue is full
            instead of letting the port drop
        timeout: Seconds to wait for the switch to quiesce

    Returns:
        BenchmarkReport

    Raises:
        ConfigurationError: invalid configuration
    """
    switch = switch or Switch(config)
    port_count = len(switch.ports)
    for flow in spec.flows:
        for port in flow.ingress_ports:
            if not 0 <= port < port_count:
                raise ValueError(f'flow ingress port {port} is not on a {port_count}-port switch')
    if install_flows:
        for flow in spec.flows:
            switch.apply_flow_mod(flow_entry_for(flow, port_count))

    log.info(f'offering {spec.total_packets:,} packets over {len(spec.flows)} flow(s)')
    recorder = _LatencyRecorder()
    handle = run_dataplane(switch=switch, egress=recorder)
    pacer = Pacer(spec.rate)

    offered = 0
    started = time.perf_counter()
    for index, (port, frame) in enumerate(generate(spec)):
        pacer.wait(index)
        if backpressure:
            while switch.ports[port].occupancy >= switch.ports[port].queue_capacity:
                time.sleep(0)
        switch.ingress(port, frame)
        offered += 1

    deadline = None if timeout is None else time.monotonic() + timeout
    while not _quiesced(switch):
        if deadline is not None and time.monotonic() > deadline:
            log.warning('switch did not quiesce before the timeout')
            break
        time.sleep(QUIESCE_POLL)
    elapsed = time.perf_counter() - started

    handle.shutdown(drain=True)
    return build_report(switch, offered, elapsed, recorder.latencies_ns)


def build_report(switch, offered, elapsed, latencies_ns) -> BenchmarkReport:
    """Summarize a finished run"""
    terms = switch.conservation()
    counters = switch.port_counters()
    dispositions = switch.stats.to_dict()
    forwarded = sum(c.tx_packets for c in counters)
    forwarded_bytes = sum(c.tx_bytes for c in counters)

    drops = {'rx_dropped': terms['rx_dropped'], 'tx_dropped': terms['tx_dropped']}
    drops.update({name: dispositions[name] for name in DISPOSITIONS if name.startswith('dropped_')})

    if latencies_ns:
        p50, p99 = np.percentile(np.asarray(latencies_ns, dtype=np.int64), [50, 99]) / 1000.0
    else:
        p50 = p99 = 0.0

    pps = forwarded / elapsed if elapsed > 0 else 0.0
    gbps = forwarded_bytes * 8 / elapsed / 1e9 if elapsed > 0 else 0.0

    report = BenchmarkReport(
        packets_offered=offered,
        packets_forwarded=forwarded,
        bytes_forwarded=forwarded_bytes,
        elapsed_seconds=elapsed,
        pps=pps,
        gbps=gbps,
        drops=drops,
        latency_p50_us=float(p50),
        latency_p99_us=float(p99),
        conservation_ok=switch.conserved() and unicast_identity(terms),
        counters=terms,
    )
    log.info(f'forwarded {forwarded:,}/{offered:,} packets in {elapsed:.3f}s ({pps:,.0f} pps)')
    return report


def unicast_identity(terms):
    """
    rx = tx + rx_dropped + tx_dropped + pipeline drops + buffered + to_controller

    Holds for a quiesced run where every forwarded frame left on one port.
    """
    return terms['rx_packets'] == (
        terms['tx_packets'] + terms['rx_dropped'] + terms['tx_dropped'] + terms['dropped_by_pipeline']
        + terms['buffered_live'] + terms['delivered_to_controller']
    ) + terms['in_queue']


def save_report(report: BenchmarkReport, directory, name=None):
    """
    Write the JSON report

    Returns:
        str: Path of the written file
    """
    os.makedirs(directory, exist_ok=True)
    name = name or f"bench_{time.strftime('%Y%m%d_%H%M%S')}.json"
    path = os.path.join(directory, name)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(report.to_json())
    return path
