"""
Switch configuration model
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

from src.models.errors import ConfigurationError
from src.models.flow import MissPolicy
from src.openflow.constants import OFP_DEFAULT_PORT
from src.utils.validators import (
    validate_choice,
    validate_host,
    validate_non_negative_float,
    validate_positive_int,
    validate_tcp_port,
)

ARBITER_POLICIES = ('longest-queue', 'round-robin')
CONNECTION_MODES = ('active', 'passive')
MISS_POLICIES = ('controller', 'drop')


@dataclass(frozen=True)
class SwitchConfig:
    """
    Effective switch configuration

    Field names are the lower-case forms of the config keys (PORT_COUNT ->
    port_count). Defaults mirror an 8-port instance with 4 x 1K tables.
    """

    port_count: int = 8
    queue_capacity: int = 1024
    output_queue_capacity: int = 1024
    table_count: int = 4
    table_capacity: int = 1024
    chunk_width: int = 8
    miss_policy: str = 'controller'
    buffer_capacity: int = 256
    buffer_ttl: float = 10.0
    miss_send_len: int = 128
    arbiter_policy: str = 'longest-queue'
    arbiter_max_wait: int = 0
    workers: int = 1
    controller_host: str = '127.0.0.1'
    controller_port: int = OFP_DEFAULT_PORT
    connection_mode: str = 'active'
    echo_interval: float = 5.0
    echo_max_missed: int = 3
    datapath_id: int = 1
    max_retries: int = 5
    initial_backoff: float = 1.0
    packet_in_queue_limit: int = 4096
    pcap_sink_dir: str = ''
    s3_bucket: str = ''
    s3_prefix: str = 'benchmarks'
    log_level: str = 'INFO'

    @property
    def effective_max_wait(self):
        """Arbiter bounded-waiting limit (0 in the config means 4 x port count)"""
        return self.arbiter_max_wait or 4 * self.port_count

    @property
    def table_miss(self) -> MissPolicy:
        return MissPolicy(self.miss_policy)

    def problems(self):
        """
        Every validation problem of this configuration

        Returns:
            list: Error messages (empty when valid)
        """
        checks = [
            validate_positive_int('PORT_COUNT', self.port_count, maximum=0xFFFFFF00),
            validate_positive_int('QUEUE_CAPACITY', self.queue_capacity),
            validate_positive_int('OUTPUT_QUEUE_CAPACITY', self.output_queue_capacity),
            validate_positive_int('TABLE_COUNT', self.table_count, maximum=254),
            validate_positive_int('TABLE_CAPACITY', self.table_capacity),
            validate_positive_int('CHUNK_WIDTH', self.chunk_width, maximum=16),
            validate_choice('MISS_POLICY', self.miss_policy, MISS_POLICIES),
            validate_positive_int('BUFFER_CAPACITY', self.buffer_capacity, minimum=0),
            validate_non_negative_float('BUFFER_TTL', self.buffer_ttl),
            validate_positive_int('MISS_SEND_LEN', self.miss_send_len, minimum=0, maximum=0xFFFF),
            validate_choice('ARBITER_POLICY', self.arbiter_policy, ARBITER_POLICIES),
            validate_positive_int('ARBITER_MAX_WAIT', self.arbiter_max_wait, minimum=0),
            validate_positive_int('WORKERS', self.workers),
            validate_host('CONTROLLER_HOST', self.controller_host),
            validate_tcp_port('CONTROLLER_PORT', self.controller_port),
            validate_choice('CONNECTION_MODE', self.connection_mode, CONNECTION_MODES),
            validate_non_negative_float('ECHO_INTERVAL', self.echo_interval),
            validate_positive_int('ECHO_MAX_MISSED', self.echo_max_missed),
            validate_positive_int('DATAPATH_ID', self.datapath_id, minimum=0, maximum=(1 << 64) - 1),
            validate_positive_int('MAX_RETRIES', self.max_retries, minimum=0),
            validate_non_negative_float('INITIAL_BACKOFF', self.initial_backoff),
            validate_positive_int('PACKET_IN_QUEUE_LIMIT', self.packet_in_queue_limit, minimum=0),
        ]
        return [error for ok, error in checks if not ok]

    def validate(self):
        """
        Raises:
            ConfigurationError: listing every problem
        """
        problems = self.problems()
        if problems:
            raise ConfigurationError(problems)
        return self

    def with_overrides(self, **overrides):
        known = {f.name for f in fields(self)}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise ConfigurationError([f'unknown setting {name.upper()}' for name in unknown])
        return replace(self, **overrides)

    def to_dict(self):
        return asdict(self)
