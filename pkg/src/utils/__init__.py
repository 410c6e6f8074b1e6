"""
Utility modules: logging, retry/backoff, validation, normalization, checksums
"""

from .normalizers import (
    normalize_string,
    parse_int,
    parse_mac,
    format_mac,
    parse_hex_bytes,
    hex_dump
)

from .validators import (
    validate_positive_int,
    validate_non_negative_float,
    validate_choice,
    validate_tcp_port,
    validate_host,
    validate_frame_size
)

from .retry import calculate_backoff

from .checksum import internet_checksum, ipv4_header_checksum, checksum_adjust

from .logger import SwitchLogger, configure_logging

__all__ = [
    'normalize_string',
    'parse_int',
    'parse_mac',
    'format_mac',
    'parse_hex_bytes',
    'hex_dump',
    'validate_positive_int',
    'validate_non_negative_float',
    'validate_choice',
    'validate_tcp_port',
    'validate_host',
    'validate_frame_size',
    'calculate_backoff',
    'internet_checksum',
    'ipv4_header_checksum',
    'checksum_adjust',
    'SwitchLogger',
    'configure_logging'
]
