"""
Switch dataplane: virtual ports, input arbiter and the switch fabric
"""

from .ports import Port, PortCounters
from .input_arbiter import InputArbiter
from .switch import Switch, SwitchHandle, run_dataplane

__all__ = ['Port', 'PortCounters', 'InputArbiter', 'Switch', 'SwitchHandle', 'run_dataplane']
