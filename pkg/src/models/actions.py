"""
Action and action-set models

Action kinds use the OpenFlow 1.3 action type codes so the codec can map
them one-to-one.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Optional

from src.openflow.constants import OFPCML_NO_BUFFER

SETTABLE_FIELDS = (
    'eth_dst', 'eth_src', 'eth_type', 'vlan_vid', 'vlan_pcp', 'mpls_label', 'mpls_tc',
    'ipv4_src', 'ipv4_dst', 'ip_dscp', 'tcp_src', 'tcp_dst', 'udp_src', 'udp_dst',
)


class ActionType(IntEnum):
    OUTPUT = 0
    SET_MPLS_TTL = 15
    DEC_MPLS_TTL = 16
    PUSH_VLAN = 17
    POP_VLAN = 18
    PUSH_MPLS = 19
    POP_MPLS = 20
    SET_NW_TTL = 23
    DEC_NW_TTL = 24
    SET_FIELD = 25


# Action-set execution order (pops, pushes, TTL decrement, sets, output)
_EXECUTION_ORDER = {
    ActionType.POP_VLAN: 0,
    ActionType.POP_MPLS: 0,
    ActionType.PUSH_MPLS: 1,
    ActionType.PUSH_VLAN: 2,
    ActionType.DEC_MPLS_TTL: 3,
    ActionType.DEC_NW_TTL: 3,
    ActionType.SET_MPLS_TTL: 4,
    ActionType.SET_NW_TTL: 4,
    ActionType.SET_FIELD: 4,
    ActionType.OUTPUT: 5,
}


@dataclass(frozen=True)
class Action:
    """
    A single OpenFlow action

    Only the parameters relevant to `kind` are set:
        OUTPUT: port, max_len
        PUSH_VLAN / PUSH_MPLS / POP_MPLS: ethertype
        SET_FIELD: field, value
        SET_NW_TTL / SET_MPLS_TTL: ttl
    """

    kind: ActionType
    port: Optional[int] = None
    max_len: int = OFPCML_NO_BUFFER
    ethertype: Optional[int] = None
    field: Optional[str] = None
    value: Optional[int] = None
    ttl: Optional[int] = None

    @classmethod
    def output(cls, port, max_len=OFPCML_NO_BUFFER):
        return cls(ActionType.OUTPUT, port=port, max_len=max_len)

    @classmethod
    def push_vlan(cls, ethertype=0x8100):
        return cls(ActionType.PUSH_VLAN, ethertype=ethertype)

    @classmethod
    def pop_vlan(cls):
        return cls(ActionType.POP_VLAN)

    @classmethod
    def push_mpls(cls, ethertype=0x8847):
        return cls(ActionType.PUSH_MPLS, ethertype=ethertype)

    @classmethod
    def pop_mpls(cls, ethertype=0x0800):
        return cls(ActionType.POP_MPLS, ethertype=ethertype)

    @classmethod
    def set_field(cls, field, value):
        if field not in SETTABLE_FIELDS:
            raise ValueError(f'field {field!r} cannot be set')
        return cls(ActionType.SET_FIELD, field=field, value=value)

    @classmethod
    def set_ttl(cls, ttl):
        return cls(ActionType.SET_NW_TTL, ttl=ttl)

    @classmethod
    def dec_ttl(cls):
        return cls(ActionType.DEC_NW_TTL)

    @classmethod
    def set_mpls_ttl(cls, ttl):
        return cls(ActionType.SET_MPLS_TTL, ttl=ttl)

    @classmethod
    def dec_mpls_ttl(cls):
        return cls(ActionType.DEC_MPLS_TTL)

    @property
    def set_key(self):
        """Identity inside an action set: one action per type, one set-field per field"""
        if self.kind == ActionType.SET_FIELD:
            return (self.kind, self.field)
        return (self.kind, None)


class ActionSet:
    """
    Accumulated action set of the pipeline

    Writing an action replaces any earlier action with the same set_key.
    """

    def __init__(self, actions: Iterable[Action] = ()):
        self._actions = {}
        self.write(actions)

    def write(self, actions):
        for action in actions:
            self._actions[action.set_key] = action

    def clear(self):
        self._actions.clear()

    def ordered(self):
        """Actions in execution order"""
        return sorted(self._actions.values(), key=lambda a: _EXECUTION_ORDER[a.kind])

    def copy(self):
        return ActionSet(self._actions.values())

    def __iter__(self):
        return iter(self.ordered())

    def __len__(self):
        return len(self._actions)

    def __eq__(self, other):
        if isinstance(other, ActionSet):
            return self._actions == other._actions
        return NotImplemented

    def __repr__(self):
        return f'ActionSet({self.ordered()!r})'
