"""
============================================================
OpenFlow 1.3 Software Switch
Command-line entry point
============================================================

Subcommands:
  run               live switch against an OpenFlow controller
  bench             generated traffic through the dataplane, measured
  replay            pcap capture(s) through the switch
  throughput-model  data width x clock throughput table
  decode            hex-dump and decode one OpenFlow message

Settings come from defaults, then the environment (.env), then flags,
then the --config file.
============================================================
"""

import argparse
import sys
import time

from config import REPORT_DIR, load_switch_config, print_config

from src.dataplane.switch import Switch, run_dataplane
from src.harness.benchmark import run_benchmark, save_report
from src.harness.replay import pcap_replay, replay_into
from src.harness.throughput import print_model, theoretical_throughput
from src.harness.traffic import uniform_spec
from src.extractors.header_extractor import IP_PROTO_TCP, IP_PROTO_UDP
from src.models.errors import ConfigurationError, FramingError, MessageError
from src.openflow.agent import OpenFlowAgent
from src.openflow.messages import decode
from src.storage.s3_uploader import upload_artifacts
from src.utils.logger import SwitchLogger, configure_logging
from src.utils.normalizers import format_mac, hex_dump, parse_hex_bytes, parse_int, parse_mac

log = SwitchLogger('ofswitch')


def _add_switch_flags(parser):
    group = parser.add_argument_group('switch settings')
    group.add_argument('--config', help='key-value config file (overrides flags)')
    group.add_argument('--ports', dest='port_count', type=int)
    group.add_argument('--queue-capacity', type=int)
    group.add_argument('--output-queue-capacity', type=int)
    group.add_argument('--tables', dest='table_count', type=int)
    group.add_argument('--table-capacity', type=int)
    group.add_argument('--miss-policy', choices=('controller', 'drop'))
    group.add_argument('--buffer-capacity', type=int)
    group.add_argument('--buffer-ttl', type=float)
    group.add_argument('--miss-send-len', type=int)
    group.add_argument('--arbiter', dest='arbiter_policy', choices=('longest-queue', 'round-robin'))
    group.add_argument('--workers', type=int)
    group.add_argument('--controller-host')
    group.add_argument('--controller-port', type=int)
    group.add_argument('--mode', dest='connection_mode', choices=('active', 'passive'))
    group.add_argument('--datapath-id', type=parse_int)
    group.add_argument('--pcap-sink-dir')
    group.add_argument('--log-level')


_SWITCH_FLAGS = (
    'port_count', 'queue_capacity', 'output_queue_capacity', 'table_count', 'table_capacity',
    'miss_policy', 'buffer_capacity', 'buffer_ttl', 'miss_send_len', 'arbiter_policy', 'workers',
    'controller_host', 'controller_port', 'connection_mode', 'datapath_id', 'pcap_sink_dir', 'log_level',
)


def _config_from(args):
    overrides = {name: getattr(args, name, None) for name in _SWITCH_FLAGS}
    config = load_switch_config(args.config, overrides)
    configure_logging(config.log_level)
    return config


def _upload(config, paths, metadata=None):
    """Send run artifacts (reports, per-port captures) to S3 when a bucket is configured"""
    if not paths:
        log.warning('nothing to upload')
        return {}
    if not config.s3_bucket:
        log.warning('S3_BUCKET is not set, skipping upload')
        return {}
    return upload_artifacts(paths, config.s3_bucket, config.s3_prefix, metadata=metadata)


def cmd_run(args):
    """Live switch: dataplane workers plus the OpenFlow agent"""
    config = _config_from(args)
    print_config(config)

    switch = Switch(config)
    handle = run_dataplane(switch=switch)
    agent = OpenFlowAgent(switch).start()
    log.info('switch running, Ctrl-C to stop')
    try:
        while handle.running:
            time.sleep(1.0)
    finally:
        agent.stop()
        handle.shutdown(drain=True)
        switch.stats.print_report(switch.port_counters())
        if args.upload:
            _upload(config, switch.capture_paths)
    return 0


def cmd_bench(args):
    """Benchmark with generated traffic"""
    config = _config_from(args)
    print_config(config)

    protocol = IP_PROTO_TCP if args.protocol == 'tcp' else IP_PROTO_UDP
    spec = uniform_spec(args.flows, args.packets, args.size, config.port_count, args.seed,
                        args.rate, protocol, args.duplicates)
    switch = Switch(config)
    report = run_benchmark(spec, switch=switch, backpressure=not args.no_backpressure, timeout=args.timeout)
    report.print_report()

    path = save_report(report, args.output_dir)
    log.info(f'report written to {path}')
    if args.upload:
        _upload(config, [path] + switch.capture_paths,
                metadata={'packets': report.packets_offered, 'pps': round(report.pps)})
    return 0 if report.conservation_ok else 1


def _port_map(entries):
    mapping = {}
    for entry in entries or ():
        mac, _, port = entry.rpartition('=')
        if not mac:
            raise ConfigurationError(f'port map entries look like MAC=PORT, got {entry!r}')
        mapping[parse_mac(mac)] = int(port)
    return mapping


def cmd_replay(args):
    """Replay captures through the switch"""
    config = _config_from(args)
    print_config(config)

    switch = Switch(config)
    agent = None
    if args.with_controller:
        agent = OpenFlowAgent(switch).start()
        if not agent.negotiated.wait(args.handshake_timeout):
            log.warning('controller did not complete the handshake, replaying anyway')

    port_map = _port_map(args.port_map)
    for mac, port in port_map.items():
        log.info(f'frames from {format_mac(mac)} enter port {port}')
    try:
        for path in args.pcap:
            log.info(f'replaying {path}')
            replay_into(switch, pcap_replay(path, port_map, args.default_port))
        switch.housekeeping()
    finally:
        if agent is not None:
            agent.stop()
        switch.close()

    switch.stats.print_report(switch.port_counters())
    if args.upload:
        _upload(config, switch.capture_paths)
    return 0 if switch.conserved() else 1


def cmd_throughput_model(args):
    """Theoretical throughput of a datapath (or the scaled-instance table)"""
    if args.width is None:
        print_model()
        return 0
    gbps = theoretical_throughput(args.width, args.clock)
    print(f'{args.width} bits x {args.clock:g} MHz = {gbps:.2f} Gbps')
    return 0


def cmd_decode(args):
    """Decode one OpenFlow message given as hex"""
    if args.file:
        with open(args.file, 'rb') as f:
            data = f.read()
    else:
        data = parse_hex_bytes(' '.join(args.hex))
    print(hex_dump(data))
    try:
        print(repr(decode(data)))
    except MessageError as e:
        print(f'malformed message: {e} (error type {e.error_type}, code {e.code})')
        return 1
    except FramingError as e:
        print(f'not a complete OpenFlow message: {e}')
        return 1
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog='ofswitch', description='OpenFlow 1.3 software switch')
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='run the switch against a controller')
    _add_switch_flags(run)
    run.add_argument('--upload', action='store_true', help='upload the per-port captures to S3 on exit')
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser('bench', help='benchmark with generated traffic')
    _add_switch_flags(bench)
    bench.add_argument('--flows', type=int, default=1)
    bench.add_argument('--packets', type=int, default=100_000, help='packets per flow')
    bench.add_argument('--size', type=int, default=64, help='frame size in bytes (64-9216)')
    bench.add_argument('--rate', type=float, help='offered packets per second (default unlimited)')
    bench.add_argument('--seed', type=int, default=0)
    bench.add_argument('--protocol', choices=('udp', 'tcp'), default='udp')
    bench.add_argument('--duplicates', type=int, default=0, help='extra ingress ports per flow')
    bench.add_argument('--no-backpressure', action='store_true', help='let input queues drop')
    bench.add_argument('--timeout', type=float, default=60.0)
    bench.add_argument('--output-dir', default=REPORT_DIR)
    bench.add_argument('--upload', action='store_true', help='upload the JSON report and captures to S3')
    bench.set_defaults(func=cmd_bench)

    replay = sub.add_parser('replay', help='replay pcap captures')
    _add_switch_flags(replay)
    replay.add_argument('pcap', nargs='+')
    replay.add_argument('--port-map', nargs='*', metavar='MAC=PORT')
    replay.add_argument('--default-port', type=int, default=0)
    replay.add_argument('--with-controller', action='store_true', help='connect the OpenFlow agent first')
    replay.add_argument('--handshake-timeout', type=float, default=10.0)
    replay.add_argument('--upload', action='store_true', help='upload the per-port captures to S3')
    replay.set_defaults(func=cmd_replay)

    model = sub.add_parser('throughput-model', help='data width x clock throughput')
    model.add_argument('--width', type=int, help='data width in bits')
    model.add_argument('--clock', type=float, default=160.0, help='clock in MHz')
    model.set_defaults(func=cmd_throughput_model)

    dec = sub.add_parser('decode', help='decode an OpenFlow message')
    dec.add_argument('hex', nargs='*', help='message bytes as hex')
    dec.add_argument('--file', help='read raw message bytes from a file')
    dec.set_defaults(func=cmd_decode)
    return parser


def main(argv=None):
    """Main entry point"""
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("\n\nUser interrupted program")
    except ConfigurationError as e:
        print(f"\n\nConfiguration error: {e}")
        sys.exit(2)
    except Exception as e:
        print(f"\n\nProgram error: {str(e)}")
        import traceback
        traceback.print_exc()
        sys.exit(1)
