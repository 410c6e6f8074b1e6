"""
Configuration management
Environment / .env defaults and the key-value switch config file
"""

import os
from dataclasses import fields

from dotenv import dotenv_values, load_dotenv

from src.models.errors import ConfigurationError
from src.models.switch_config import SwitchConfig
from src.utils.normalizers import normalize_string, parse_int

# Load .env file
load_dotenv()

# ============================================================
# Keys (upper-case field names of SwitchConfig)
# ============================================================

DEFAULTS = SwitchConfig()
KEYS = tuple(f.name.upper() for f in fields(SwitchConfig))


def _cast(key, raw, problems):
    """Convert a text value to the type of the key's default"""
    default = getattr(DEFAULTS, key.lower())
    text = normalize_string(raw)
    try:
        if isinstance(default, int):
            return parse_int(text)
        if isinstance(default, float):
            return float(text)
        return text
    except ValueError:
        problems.append(f'{key} must be a {type(default).__name__}, got {raw!r}')
        return default


def _from_mapping(mapping, problems, source):
    values = {}
    for key, raw in mapping.items():
        key = key.upper()
        if key not in KEYS:
            problems.append(f'unknown setting {key} in {source}')
            continue
        if raw is None:
            continue
        values[key.lower()] = _cast(key, raw, problems)
    return values


# ============================================================
# Environment
# ============================================================

_ENV_PROBLEMS = []
ENV_SETTINGS = _from_mapping({k: os.environ[k] for k in KEYS if k in os.environ}, _ENV_PROBLEMS, 'environment')

LOG_LEVEL = ENV_SETTINGS.get('log_level', DEFAULTS.log_level)
S3_BUCKET = ENV_SETTINGS.get('s3_bucket', DEFAULTS.s3_bucket)
S3_PREFIX = ENV_SETTINGS.get('s3_prefix', DEFAULTS.s3_prefix)
REPORT_DIR = os.getenv('REPORT_DIR', 'reports')


def load_switch_config(path=None, overrides=None):
    """
    Build the effective switch configuration

    Precedence (lowest to highest): built-in defaults, environment, CLI
    flags (overrides), config file.

    Args:
        path: Optional dotenv-format config file
        overrides: Mapping of lower-case setting names to values (None = unset)

    Returns:
        SwitchConfig: Validated configuration

    Raises:
        ConfigurationError: listing every problem found
    """
    problems = list(_ENV_PROBLEMS)
    values = dict(ENV_SETTINGS)

    for name, value in (overrides or {}).items():
        if value is None:
            continue
        if name.upper() not in KEYS:
            problems.append(f'unknown setting {name.upper()}')
            continue
        values[name] = value

    if path:
        if not os.path.exists(path):
            raise ConfigurationError(f'config file not found: {path}')
        values.update(_from_mapping(dotenv_values(path), problems, path))

    if problems:
        raise ConfigurationError(problems)
    return DEFAULTS.with_overrides(**values).validate()


# Print configuration (for debugging)
def print_config(config: SwitchConfig):
    """Print the effective configuration"""
    print("\n📋 Current configuration:")
    print(f"  Ports: {config.port_count} (input queue {config.queue_capacity}, "
          f"output queue {config.output_queue_capacity})")
    print(f"  Tables: {config.table_count} x {config.table_capacity} entries "
          f"(chunk width {config.chunk_width} bits), miss policy {config.miss_policy}")
    print(f"  Packet buffer: {config.buffer_capacity} slots, TTL {config.buffer_ttl:g}s, "
          f"miss_send_len {config.miss_send_len}")
    print(f"  Arbiter: {config.arbiter_policy} (max wait {config.effective_max_wait}), workers {config.workers}")
    print(f"  Controller: {config.connection_mode} {config.controller_host}:{config.controller_port}, "
          f"datapath {config.datapath_id:#018x}")
    print(f"  Keep-alive: every {config.echo_interval:g}s, {config.echo_max_missed} missed allowed")
    print(f"  Max Retries: {config.max_retries} (initial backoff {config.initial_backoff:g}s)")
    if config.pcap_sink_dir:
        print(f"  pcap sinks: {config.pcap_sink_dir}")
    if config.s3_bucket:
        print(f"  S3: s3://{config.s3_bucket}/{config.s3_prefix}")
    print()
