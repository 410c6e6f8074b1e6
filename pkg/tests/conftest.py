"""
Shared fixtures for the switch test suite
"""

import pytest

from helpers import FakeClock
from src.dataplane.switch import Switch
from src.harness.frame_builder import FrameTemplate, build_frame
from src.models.switch_config import SwitchConfig


@pytest.fixture
def clock():
    return FakeClock()


@pytest.fixture
def small_config():
    return SwitchConfig(port_count=4, queue_capacity=16, output_queue_capacity=64, table_count=4,
                        table_capacity=64, buffer_capacity=8, buffer_ttl=5.0, miss_send_len=128)


@pytest.fixture
def switch(small_config, clock):
    sw = Switch(small_config, clock=clock)
    yield sw
    sw.close()


@pytest.fixture
def udp_frame():
    return build_frame(FrameTemplate(), 64)
