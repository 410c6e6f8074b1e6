"""
Statistics tracking for dataplane runs and benchmarks
"""

import json
import threading
import time
from dataclasses import asdict, dataclass, field

DISPOSITIONS = (
    'forwarded',
    'to_controller',
    'dropped_malicious',
    'dropped_miss',
    'dropped_action',
    'dropped_buffer_full',
    'dropped_controller_queue',
    'dropped_expired',
)


class DataplaneStats:
    """
    Track what happened to every frame that entered the switch

    Each port-originated frame that leaves the input queues gets exactly one
    disposition. Frames injected by Packet-Out are counted separately.

    Attributes:
        forwarded: Frames emitted on at least one port
        to_controller: Frames handed to the controller unbuffered
        dropped_malicious: Frames flagged by the parser
        dropped_miss: Table misses under a drop policy
        dropped_action: Empty action sets, TTL expiry, controller-ordered drops
        dropped_buffer_full: Misses sent truncated because the buffer was full
        dropped_controller_queue: Packet-Ins refused by a full outbound queue
        dropped_expired: Buffered frames never claimed by the controller
        injected: Packet-Out frames carrying their own data
        released: Buffered frames claimed by Packet-Out or FlowMod
        start_time: Run start timestamp
        errors: Error messages collected during the run
    """

    def __init__(self):
        for name in DISPOSITIONS:
            setattr(self, name, 0)
        self.injected = 0
        self.released = 0
        self.start_time = time.time()
        self.errors = []
        self._lock = threading.Lock()

    def add(self, disposition, count=1):
        """
        Record frame dispositions

        Args:
            disposition: One of DISPOSITIONS
            count: Number of frames
        """
        if disposition not in DISPOSITIONS:
            raise ValueError(f'unknown disposition {disposition!r}')
        with self._lock:
            setattr(self, disposition, getattr(self, disposition) + count)

    def add_injected(self):
        with self._lock:
            self.injected += 1

    def add_released(self):
        with self._lock:
            self.released += 1

    def add_error(self, error):
        with self._lock:
            self.errors.append(str(error))

    def settled(self):
        """Frames with a final disposition"""
        return sum(getattr(self, name) for name in DISPOSITIONS)

    def get_execution_time(self):
        """
        Get formatted execution time

        Returns:
            str: Formatted time string (e.g., "5m 30s")
        """
        elapsed = time.time() - self.start_time
        minutes = int(elapsed // 60)
        seconds = int(elapsed % 60)
        return f"{minutes}m {seconds}s"

    def print_report(self, port_counters=None):
        """Print formatted execution report"""
        print("\n" + "=" * 50)
        print("--- Dataplane Report ---")
        print("=" * 50)
        for name in DISPOSITIONS:
            print(f"{name.replace('_', ' ').title()}: {getattr(self, name):,}")
        print(f"Injected (Packet-Out): {self.injected:,}")
        print(f"Released From Buffer: {self.released:,}")
        print(f"Execution Time: {self.get_execution_time()}")

        if port_counters:
            print("\n  Port counters:")
            for port_id, counters in enumerate(port_counters):
                print(f"   port {port_id}: rx={counters.rx_packets:,} tx={counters.tx_packets:,} "
                      f"rx_dropped={counters.rx_dropped:,} tx_dropped={counters.tx_dropped:,}")

        if self.errors:
            print(f"\n  Errors encountered: {len(self.errors)}")
            for error in self.errors[:5]:  # Show first 5 errors
                print(f"   - {error}")

        print("=" * 50 + "\n")

    def to_dict(self):
        """
        Convert statistics to dictionary

        Returns:
            dict: Statistics as dictionary
        """
        with self._lock:
            result = {name: getattr(self, name) for name in DISPOSITIONS}
            result.update(injected=self.injected, released=self.released,
                          execution_time=self.get_execution_time(), errors=list(self.errors))
            return result


@dataclass
class BenchmarkReport:
    """
    Result of a benchmark run

    Attributes:
        packets_offered: Frames generated
        packets_forwarded: Frames emitted on a port
        bytes_forwarded: Octets emitted on ports
        elapsed_seconds: Wall time from first ingress to quiesce
        pps: Forwarded frames per second
        gbps: Effective forwarding rate, pps x frame bits
        drops: Drop counts by cause (rx, tx, pipeline dispositions)
        latency_p50_us / latency_p99_us: Ingress-to-egress latency percentiles
        conservation_ok: Whether the global conservation identity held
    """

    packets_offered: int = 0
    packets_forwarded: int = 0
    bytes_forwarded: int = 0
    elapsed_seconds: float = 0.0
    pps: float = 0.0
    gbps: float = 0.0
    drops: dict = field(default_factory=dict)
    latency_p50_us: float = 0.0
    latency_p99_us: float = 0.0
    conservation_ok: bool = True
    counters: dict = field(default_factory=dict)

    @property
    def total_drops(self):
        return sum(self.drops.values())

    def print_report(self):
        """Print formatted benchmark report"""
        print("\n" + "=" * 50)
        print("--- Benchmark Report ---")
        print("=" * 50)
        print(f"Packets Offered: {self.packets_offered:,}")
        print(f"Packets Forwarded: {self.packets_forwarded:,}")
        print(f"Elapsed: {self.elapsed_seconds:.3f}s")
        print(f"Rate: {self.pps:,.0f} pps ({self.gbps:.3f} Gbps)")
        print(f"Latency p50/p99: {self.latency_p50_us:.1f}us / {self.latency_p99_us:.1f}us")
        print(f"Drops: {self.total_drops:,}")
        for cause, count in self.drops.items():
            if count:
                print(f"   - {cause}: {count:,}")
        print(f"Conservation: {'OK' if self.conservation_ok else 'VIOLATED'}")
        print("=" * 50 + "\n")

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)
