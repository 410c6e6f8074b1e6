"""
Flow-table models: match keys, instructions, entries and pipeline results
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Optional

from src.models.actions import Action, ActionSet
from src.openflow.constants import OFP_NO_BUFFER, OFPP_ANY

OFPFF_SEND_FLOW_REM = 1 << 0
OFPFF_CHECK_OVERLAP = 1 << 1
OFPFF_RESET_COUNTS = 1 << 2


@dataclass(frozen=True)
class MatchField:
    """
    One match constraint as the controller expressed it

    Attributes:
        name: Field name ('in_port', 'eth_dst', 'tcp_src', ...)
        value: Field value
        mask: Bit mask (None = exact)
    """

    name: str
    value: int
    mask: Optional[int] = None


@dataclass(frozen=True)
class MaskedKey:
    """
    Ternary key: mask bit 1 = care. Don't-care value bits are always zero.
    """

    value: int
    mask: int

    def __post_init__(self):
        if self.value & ~self.mask:
            raise ValueError('MaskedKey value has bits set outside its mask')

    @classmethod
    def of(cls, value, mask):
        """Build a canonical key (value bits outside the mask are dropped)"""
        return cls(value & mask, mask)

    @classmethod
    def exact(cls, value, width):
        mask = (1 << width) - 1
        return cls(value & mask, mask)

    def matches(self, key):
        return key & self.mask == self.value

    def subsumes(self, other):
        """True if every key matched by `other` is also matched by self"""
        return self.mask & ~other.mask == 0 and other.value & self.mask == self.value


@dataclass
class InstructionSet:
    """
    Instructions of one flow entry

    clear_actions applies before write_actions when both are present.
    """

    goto_table: Optional[int] = None
    write_actions: Optional[tuple[Action, ...]] = None
    clear_actions: bool = False

    def apply_to(self, action_set: ActionSet):
        if self.clear_actions:
            action_set.clear()
        if self.write_actions:
            action_set.write(self.write_actions)

    def outputs_to(self, port):
        if port == OFPP_ANY:
            return True
        return any(a.port == port for a in self.write_actions or ())


@dataclass
class FlowCounters:
    packet_count: int = 0
    byte_count: int = 0


@dataclass
class TableCounters:
    lookup_count: int = 0
    matched_count: int = 0
    active_entries: int = 0


class MissPolicy(str, Enum):
    CONTROLLER = 'controller'
    CONTINUE = 'continue'
    DROP = 'drop'


class FlowModCommand(IntEnum):
    ADD = 0
    MODIFY = 1
    MODIFY_STRICT = 2
    DELETE = 3
    DELETE_STRICT = 4


class FlowRemovedReason(IntEnum):
    IDLE_TIMEOUT = 0
    HARD_TIMEOUT = 1
    DELETE = 2


@dataclass
class FlowEntry:
    """
    One row of a flow table

    Attributes:
        match: Masked key over the match-key layout
        match_fields: The controller's match fields (kept for stats replies)
        priority: 16-bit priority
        instructions: InstructionSet
        counters: FlowCounters
        cookie: Opaque controller cookie
        idle_timeout / hard_timeout: Seconds, 0 = none
        installed_at / last_hit: Monotonic seconds
        flags: OFPFF_* bits
        table_id: Owning table
        slot: Matcher slot holding the entry
    """

    match: MaskedKey
    priority: int
    instructions: InstructionSet
    match_fields: tuple[MatchField, ...] = ()
    counters: FlowCounters = field(default_factory=FlowCounters)
    cookie: int = 0
    idle_timeout: int = 0
    hard_timeout: int = 0
    installed_at: float = 0.0
    last_hit: float = 0.0
    flags: int = 0
    table_id: int = 0
    slot: int = -1

    def duration(self, now):
        return max(0.0, now - self.installed_at)


@dataclass(frozen=True)
class FlowMod:
    """
    Flow-table modification descriptor (decoded FlowMod, pipeline-level)
    """

    command: FlowModCommand
    table_id: int = 0
    match: tuple[MatchField, ...] = ()
    priority: int = 0x8000
    instructions: InstructionSet = field(default_factory=InstructionSet)
    cookie: int = 0
    cookie_mask: int = 0
    idle_timeout: int = 0
    hard_timeout: int = 0
    flags: int = 0
    out_port: int = OFPP_ANY
    buffer_id: int = OFP_NO_BUFFER
    apply_actions: bool = False


class ResultKind(str, Enum):
    ACTIONS = 'actions'
    MISS = 'miss'
    DROP_MALICIOUS = 'drop-malicious'


@dataclass
class PipelineResult:
    kind: ResultKind
    action_set: Optional[ActionSet] = None
    table_id: Optional[int] = None
    cookie: int = 0xFFFFFFFFFFFFFFFF

    @classmethod
    def actions(cls, action_set, table_id, cookie):
        return cls(ResultKind.ACTIONS, action_set=action_set, table_id=table_id, cookie=cookie)

    @classmethod
    def miss(cls, table_id):
        return cls(ResultKind.MISS, table_id=table_id)

    @classmethod
    def drop_malicious(cls):
        return cls(ResultKind.DROP_MALICIOUS)


@dataclass(frozen=True)
class FlowStatsRecord:
    table_id: int
    priority: int
    match_fields: tuple[MatchField, ...]
    instructions: InstructionSet
    cookie: int
    packet_count: int
    byte_count: int
    duration: float
    idle_timeout: int
    hard_timeout: int
    flags: int


@dataclass(frozen=True)
class TableStatsRecord:
    table_id: int
    active_entries: int
    lookup_count: int
    matched_count: int


@dataclass(frozen=True)
class RemovedFlow:
    """Descriptor of a flow leaving a table, used for FLOW_REMOVED"""

    table_id: int
    priority: int
    match_fields: tuple[MatchField, ...]
    cookie: int
    reason: FlowRemovedReason
    duration: float
    idle_timeout: int
    hard_timeout: int
    packet_count: int
    byte_count: int
    flags: int

    @property
    def notify(self):
        return bool(self.flags & OFPFF_SEND_FLOW_REM)
