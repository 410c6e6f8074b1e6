"""
Throughput model for the scaled hardware instances

Maximum throughput is the processing data width times the clock frequency.
"""

from dataclasses import dataclass


def theoretical_throughput(data_width_bits, clock_mhz):
    """
    Peak throughput of a datapath

    Args:
        data_width_bits: Processing data width in bits
        clock_mhz: Clock frequency in MHz

    Returns:
        float: Throughput in Gbps (width × clock × 10⁻³)

    Raises:
        ValueError: non-positive input
    """
    if data_width_bits <= 0 or clock_mhz <= 0:
        raise ValueError(f'data width and clock must be positive (got {data_width_bits}, {clock_mhz})')
    return data_width_bits * clock_mhz / 1000


@dataclass(frozen=True)
class ScaledInstance:
    data_width_bits: int
    clock_mhz: float
    port_count: int
    line_rate_gbps: float

    @property
    def theoretical_gbps(self):
        return theoretical_throughput(self.data_width_bits, self.clock_mhz)

    @property
    def port_capacity_gbps(self):
        return self.port_count * self.line_rate_gbps

    @property
    def achievable_gbps(self):
        """Bounded by both the datapath and the attached ports"""
        return min(self.theoretical_gbps, self.port_capacity_gbps)

    def to_dict(self):
        return {
            'data_width_bits': self.data_width_bits,
            'clock_mhz': self.clock_mhz,
            'ports': f'{self.port_count}x{self.line_rate_gbps:g}G',
            'theoretical_gbps': round(self.theoretical_gbps, 2),
            'achievable_gbps': round(self.achievable_gbps, 2),
        }


SCALED_INSTANCES = (
    ScaledInstance(512, 160, 8, 10),
    ScaledInstance(1024, 160, 16, 10),
    ScaledInstance(2048, 160, 32, 10),
    ScaledInstance(4096, 160, 4, 100),
)


def print_model(instances=SCALED_INSTANCES):
    """Print the scaled-instance table"""
    print("\n" + "=" * 50)
    print(" Throughput Model")
    print("=" * 50)
    print(f" {'width':>6} {'clock':>7} {'ports':>8} {'peak Gbps':>10} {'achievable':>11}")
    for inst in instances:
        row = inst.to_dict()
        print(f" {row['data_width_bits']:>6} {row['clock_mhz']:>5g}MHz {row['ports']:>8} "
              f"{row['theoretical_gbps']:>10.2f} {row['achievable_gbps']:>11.2f}")
    print("=" * 50)
