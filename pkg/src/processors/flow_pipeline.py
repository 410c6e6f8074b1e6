"""
Flow Match Unit: ordered flow tables, goto-table traversal, statistics
and flow-mod application

Processing always starts at table 0 and may only jump forward, so a
packet visits at most one entry per table.
"""

from __future__ import annotations

import threading
import time
from contextlib import ExitStack
from enum import Enum
from typing import Optional

from src.models.actions import ActionSet
from src.models.errors import CapacityError, FlowModError
from src.models.flow import (
    OFPFF_CHECK_OVERLAP,
    OFPFF_RESET_COUNTS,
    FlowCounters,
    FlowEntry,
    FlowMod,
    FlowModCommand,
    FlowRemovedReason,
    FlowStatsRecord,
    MaskedKey,
    MissPolicy,
    PipelineResult,
    RemovedFlow,
    TableCounters,
    TableStatsRecord,
)
from src.models.frames import HeaderTuple
from src.openflow.constants import (
    OFPP_ANY,
    OFPTC_TABLE_MISS_CONTINUE,
    OFPTC_TABLE_MISS_CONTROLLER,
    OFPTC_TABLE_MISS_DROP,
    OFPTC_TABLE_MISS_MASK,
    OFPTT_ALL,
    BadInstructionCode,
    ErrorType,
    FlowModFailedCode,
    TableModFailedCode,
)
from src.processors.match_key import KEY_WIDTH, match_to_key, tuple_to_key
from src.processors.ternary_matcher import TernaryMatcher
from src.utils.logger import SwitchLogger

log = SwitchLogger(__name__)

_TABLE_CONFIG_POLICY = {
    OFPTC_TABLE_MISS_CONTROLLER: MissPolicy.CONTROLLER,
    OFPTC_TABLE_MISS_CONTINUE: MissPolicy.CONTINUE,
    OFPTC_TABLE_MISS_DROP: MissPolicy.DROP,
}


class StatsScope(str, Enum):
    FLOW = 'flow'
    TABLE = 'table'


def _overlaps(a: MaskedKey, b: MaskedKey):
    return (a.value ^ b.value) & a.mask & b.mask == 0


class FlowTable:
    """
    One flow table over a matcher

    Attributes:
        table_id: Position in the pipeline
        matcher: TernaryMatcher (or any object with the same interface)
        entries: slot -> FlowEntry
        counters: TableCounters
        miss_policy: MissPolicy applied on a lookup miss
        lock: Guards matcher, entries and counters
    """

    def __init__(self, table_id, capacity, chunk_width=8, miss_policy=MissPolicy.CONTROLLER,
                 matcher_factory=TernaryMatcher):
        self.table_id = table_id
        self.capacity = capacity
        self.matcher = matcher_factory(KEY_WIDTH, capacity, chunk_width)
        self.entries: dict[int, FlowEntry] = {}
        self.counters = TableCounters()
        self.miss_policy = MissPolicy(miss_policy)
        self.lock = threading.RLock()

    def lookup(self, key, frame_len, now) -> Optional[FlowEntry]:
        """Match a key and account the lookup, hit and entry counters atomically"""
        with self.lock:
            self.counters.lookup_count += 1
            hit = self.matcher.lookup(key)
            if hit is None:
                return None
            entry = self.entries[hit[0]]
            self.counters.matched_count += 1
            entry.counters.packet_count += 1
            entry.counters.byte_count += frame_len
            entry.last_hit = now
            return entry

    def install(self, entry: FlowEntry):
        try:
            slot = self.matcher.insert(entry.match, entry.priority)
        except CapacityError as e:
            raise FlowModError(ErrorType.FLOW_MOD_FAILED, FlowModFailedCode.TABLE_FULL,
                               f'table {self.table_id} full') from e
        entry.slot = slot
        entry.table_id = self.table_id
        self.entries[slot] = entry
        self.counters.active_entries = len(self.entries)

    def evict(self, entry: FlowEntry):
        self.matcher.remove(entry.slot)
        self.entries.pop(entry.slot, None)
        self.counters.active_entries = len(self.entries)

    def find_strict(self, key, priority) -> Optional[FlowEntry]:
        for entry in self.entries.values():
            if entry.priority == priority and entry.match == key:
                return entry
        return None


class FlowPipeline:
    """
    Ordered array of flow tables

    Args:
        table_count: Number of tables
        table_capacity: Entries per table
        chunk_width: Matcher chunk width in bits
        miss_policy: Default MissPolicy for every table
        matcher_factory: Matcher class (TernaryMatcher, or OracleMatcher for
            differential runs)
        clock: Seconds clock used when `now` is not supplied
    """

    def __init__(self, table_count=4, table_capacity=1024, chunk_width=8,
                 miss_policy=MissPolicy.CONTROLLER, matcher_factory=TernaryMatcher,
                 clock=time.monotonic):
        if table_count < 1:
            raise ValueError('pipeline needs at least one table')
        self.clock = clock
        self.tables = [
            FlowTable(i, table_capacity, chunk_width, miss_policy, matcher_factory)
            for i in range(table_count)
        ]

    def __len__(self):
        return len(self.tables)

    def process(self, header: HeaderTuple, frame_len, now=None) -> PipelineResult:
        """
        Run a parsed frame through the table pipeline

        Args:
            header: HeaderTuple from the extractor
            frame_len: Frame length in bytes (for byte counters)
            now: Seconds timestamp for idle-timeout bookkeeping

        Returns:
            PipelineResult: accumulated action set, miss at a table id, or
            drop-malicious
        """
        if header.malicious:
            return PipelineResult.drop_malicious()

        now = self.clock() if now is None else now
        key = tuple_to_key(header)
        action_set = ActionSet()
        table_id = 0

        while True:
            table = self.tables[table_id]
            entry = table.lookup(key, frame_len, now)
            if entry is None:
                if table.miss_policy == MissPolicy.CONTINUE and table_id + 1 < len(self.tables):
                    table_id += 1
                    continue
                return PipelineResult.miss(table_id)

            entry.instructions.apply_to(action_set)
            goto = entry.instructions.goto_table
            if goto is None:
                return PipelineResult.actions(action_set, table_id, entry.cookie)
            table_id = goto

    def miss_policy(self, table_id) -> MissPolicy:
        return self.tables[table_id].miss_policy

    def _check_instructions(self, mod: FlowMod, table_id):
        if mod.apply_actions:
            raise FlowModError(ErrorType.BAD_INSTRUCTION, BadInstructionCode.UNSUP_INST,
                               'apply-actions is not supported; use write-actions')
        goto = mod.instructions.goto_table
        if goto is not None and not table_id < goto < len(self.tables):
            raise FlowModError(ErrorType.BAD_INSTRUCTION, BadInstructionCode.BAD_TABLE_ID,
                               f'goto table {goto} from table {table_id}: must move forward to an existing table')

    def _target_tables(self, mod: FlowMod):
        if mod.table_id == OFPTT_ALL and mod.command in (FlowModCommand.DELETE, FlowModCommand.DELETE_STRICT):
            return list(self.tables)
        if not 0 <= mod.table_id < len(self.tables):
            raise FlowModError(ErrorType.FLOW_MOD_FAILED, FlowModFailedCode.BAD_TABLE_ID,
                               f'no table {mod.table_id}')
        return [self.tables[mod.table_id]]

    @staticmethod
    def _selected(table, mod, key, strict):
        for entry in list(table.entries.values()):
            if strict:
                if entry.priority != mod.priority or entry.match != key:
                    continue
            elif not key.subsumes(entry.match):
                continue
            if mod.cookie_mask and (entry.cookie ^ mod.cookie) & mod.cookie_mask:
                continue
            yield entry

    def apply_flow_mod(self, mod: FlowMod, now=None) -> list[RemovedFlow]:
        """
        Apply a FlowMod to the target table(s)

        Args:
            mod: FlowMod descriptor
            now: Seconds timestamp (install time)

        Returns:
            list: RemovedFlow descriptors for entries deleted by the command

        Raises:
            FlowModError: BAD_TABLE_ID, TABLE_FULL, OVERLAP or BAD_INSTRUCTION
            MessageError: match fields rejected (BAD_MATCH)
        """
        now = self.clock() if now is None else now
        try:
            command = FlowModCommand(mod.command)
        except ValueError:
            raise FlowModError(ErrorType.FLOW_MOD_FAILED, FlowModFailedCode.BAD_COMMAND,
                               f'unknown flow-mod command {mod.command}') from None
        tables = self._target_tables(mod)
        key = match_to_key(mod.match)

        if command == FlowModCommand.ADD:
            table = tables[0]
            self._check_instructions(mod, table.table_id)
            with table.lock:
                self._add(table, mod, key, now)
            log.debug(f'table {table.table_id}: added priority {mod.priority} ({len(table.entries)} active)')
            return []

        if command in (FlowModCommand.MODIFY, FlowModCommand.MODIFY_STRICT):
            table = tables[0]
            self._check_instructions(mod, table.table_id)
            with table.lock:
                for entry in self._selected(table, mod, key, command == FlowModCommand.MODIFY_STRICT):
                    entry.instructions = mod.instructions
                    if mod.flags & OFPFF_RESET_COUNTS:
                        entry.counters = FlowCounters()
            return []

        if command in (FlowModCommand.DELETE, FlowModCommand.DELETE_STRICT):
            removed = []
            for table in tables:
                with table.lock:
                    for entry in self._selected(table, mod, key, command == FlowModCommand.DELETE_STRICT):
                        if not entry.instructions.outputs_to(mod.out_port):
                            continue
                        table.evict(entry)
                        removed.append(self._removed(entry, FlowRemovedReason.DELETE, now))
            log.debug(f'deleted {len(removed)} flow(s)')
            return removed

    def _add(self, table, mod, key, now):
        existing = table.find_strict(key, mod.priority)
        if existing is None and mod.flags & OFPFF_CHECK_OVERLAP:
            for entry in table.entries.values():
                if entry.priority == mod.priority and _overlaps(entry.match, key):
                    raise FlowModError(ErrorType.FLOW_MOD_FAILED, FlowModFailedCode.OVERLAP,
                                       'overlapping entry with equal priority')

        entry = existing or FlowEntry(match=key, priority=mod.priority, instructions=mod.instructions)
        entry.instructions = mod.instructions
        entry.match_fields = tuple(mod.match)
        entry.cookie = mod.cookie
        entry.idle_timeout = mod.idle_timeout
        entry.hard_timeout = mod.hard_timeout
        entry.flags = mod.flags
        entry.installed_at = entry.last_hit = now
        entry.counters = FlowCounters()
        if existing is None:
            table.install(entry)

    @staticmethod
    def _removed(entry, reason, now):
        return RemovedFlow(
            table_id=entry.table_id,
            priority=entry.priority,
            match_fields=entry.match_fields,
            cookie=entry.cookie,
            reason=reason,
            duration=entry.duration(now),
            idle_timeout=entry.idle_timeout,
            hard_timeout=entry.hard_timeout,
            packet_count=entry.counters.packet_count,
            byte_count=entry.counters.byte_count,
            flags=entry.flags,
        )

    def expire_flows(self, now=None) -> list[RemovedFlow]:
        """
        Remove entries past their hard or idle timeout

        Args:
            now: Seconds timestamp

        Returns:
            list: RemovedFlow descriptors (for FLOW_REMOVED notification)
        """
        now = self.clock() if now is None else now
        expired = []
        for table in self.tables:
            with table.lock:
                for entry in list(table.entries.values()):
                    if entry.hard_timeout and now - entry.installed_at >= entry.hard_timeout:
                        reason = FlowRemovedReason.HARD_TIMEOUT
                    elif entry.idle_timeout and now - entry.last_hit >= entry.idle_timeout:
                        reason = FlowRemovedReason.IDLE_TIMEOUT
                    else:
                        continue
                    table.evict(entry)
                    expired.append(self._removed(entry, reason, now))
        if expired:
            log.debug(f'expired {len(expired)} flow(s)')
        return expired

    def table_mod(self, table_id, config):
        """
        Set the miss policy of one table (or all) from table-config bits

        Raises:
            FlowModError: TABLE_MOD_FAILED (bad table or config)
        """
        if config & ~OFPTC_TABLE_MISS_MASK or config not in _TABLE_CONFIG_POLICY:
            raise FlowModError(ErrorType.TABLE_MOD_FAILED, TableModFailedCode.BAD_CONFIG,
                               f'unsupported table config {config:#x}')
        if table_id == OFPTT_ALL:
            targets = self.tables
        elif 0 <= table_id < len(self.tables):
            targets = [self.tables[table_id]]
        else:
            raise FlowModError(ErrorType.TABLE_MOD_FAILED, TableModFailedCode.BAD_TABLE,
                               f'no table {table_id}')
        for table in targets:
            with table.lock:
                table.miss_policy = _TABLE_CONFIG_POLICY[config]

    def collect_stats(self, scope=StatsScope.FLOW, table_id=OFPTT_ALL, match=(), out_port=OFPP_ANY,
                      cookie=0, cookie_mask=0, now=None):
        """
        Snapshot per-flow or per-table statistics

        Every table lock is held while the snapshot is taken, so the records
        are consistent at a single instant.

        Args:
            scope: StatsScope.FLOW or StatsScope.TABLE
            table_id, match, out_port, cookie, cookie_mask: flow filters
                (non-strict match subsumption, as for DELETE)
            now: Seconds timestamp for durations

        Returns:
            list: FlowStatsRecord or TableStatsRecord items
        """
        now = self.clock() if now is None else now
        scope = StatsScope(scope)
        with ExitStack() as stack:
            for table in self.tables:
                stack.enter_context(table.lock)

            if scope == StatsScope.TABLE:
                return [
                    TableStatsRecord(
                        table_id=t.table_id,
                        active_entries=len(t.entries),
                        lookup_count=t.counters.lookup_count,
                        matched_count=t.counters.matched_count,
                    )
                    for t in self.tables
                ]

            key = match_to_key(match)
            records = []
            for table in self.tables:
                if table_id != OFPTT_ALL and table.table_id != table_id:
                    continue
                for slot in sorted(table.entries):
                    entry = table.entries[slot]
                    if not key.subsumes(entry.match):
                        continue
                    if cookie_mask and (entry.cookie ^ cookie) & cookie_mask:
                        continue
                    if not entry.instructions.outputs_to(out_port):
                        continue
                    records.append(FlowStatsRecord(
                        table_id=table.table_id,
                        priority=entry.priority,
                        match_fields=entry.match_fields,
                        instructions=entry.instructions,
                        cookie=entry.cookie,
                        packet_count=entry.counters.packet_count,
                        byte_count=entry.counters.byte_count,
                        duration=entry.duration(now),
                        idle_timeout=entry.idle_timeout,
                        hard_timeout=entry.hard_timeout,
                        flags=entry.flags,
                    ))
            return records
