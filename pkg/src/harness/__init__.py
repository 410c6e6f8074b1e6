"""
Test and benchmark harness: throughput model, traffic, replay, mock controller
"""

from .throughput import SCALED_INSTANCES, ScaledInstance, theoretical_throughput
from .frame_builder import FrameTemplate, build_frame
from .traffic import FlowSpec, TrafficSpec, generate, uniform_spec
from .benchmark import run_benchmark
from .replay import pcap_replay, replay_into
from .mock_controller import MockController, Step, expect_type

__all__ = [
    'SCALED_INSTANCES', 'ScaledInstance', 'theoretical_throughput',
    'FrameTemplate', 'build_frame',
    'FlowSpec', 'TrafficSpec', 'generate', 'uniform_spec',
    'run_benchmark',
    'pcap_replay', 'replay_into',
    'MockController', 'Step', 'expect_type',
]
