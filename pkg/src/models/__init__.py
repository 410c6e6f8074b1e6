"""
Data models for the switch fabric
"""

from .errors import (
    SwitchError,
    ConfigurationError,
    CapacityError,
    FramingError,
    EncodingError,
    OpenFlowError,
    FlowModError,
    BufferUnknownError,
    MessageError,
    PcapFormatError,
    ScriptTimeoutError,
)
from .frames import RawFrame, HeaderTuple, HeaderLayout, MaliciousReason
from .actions import Action, ActionSet, ActionType
from .flow import FlowMod, FlowModCommand, InstructionSet, MatchField, MissPolicy, PipelineResult, ResultKind
from .statistics import DataplaneStats, BenchmarkReport, DISPOSITIONS
from .switch_config import SwitchConfig

__all__ = [
    'SwitchError', 'ConfigurationError', 'CapacityError', 'FramingError', 'EncodingError',
    'OpenFlowError', 'FlowModError', 'BufferUnknownError', 'MessageError', 'PcapFormatError',
    'ScriptTimeoutError',
    'RawFrame', 'HeaderTuple', 'HeaderLayout', 'MaliciousReason',
    'Action', 'ActionSet', 'ActionType',
    'FlowMod', 'FlowModCommand', 'InstructionSet', 'MatchField', 'MissPolicy', 'PipelineResult', 'ResultKind',
    'DataplaneStats', 'BenchmarkReport', 'DISPOSITIONS',
    'SwitchConfig',
]
