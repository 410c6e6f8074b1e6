"""
Match/action processors: ternary matcher, flow pipeline, action engine
"""

from .ternary_matcher import TernaryMatcher, OracleMatcher, oracle_lookup
from .flow_pipeline import FlowPipeline, FlowTable, StatsScope
from .packet_buffer import PacketBuffer, BufferedPacket
from .action_engine import ActionEngine, validate_actions

__all__ = [
    'TernaryMatcher', 'OracleMatcher', 'oracle_lookup',
    'FlowPipeline', 'FlowTable', 'StatsScope',
    'PacketBuffer', 'BufferedPacket',
    'ActionEngine', 'validate_actions',
]
