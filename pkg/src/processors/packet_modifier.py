"""
Header rewrites used by the action engine

Every function takes the frame as a bytearray plus its HeaderLayout and
returns a ModifyOutcome. Structural rewrites (push/pop) change offsets, so
callers re-extract the layout after them.
"""

from __future__ import annotations

import struct
from enum import Enum

from src.extractors.header_extractor import (
    ETH_TYPE_MPLS,
    IP_PROTO_TCP,
    IP_PROTO_UDP,
    TAG_LEN,
)
from src.models.actions import Action, ActionType
from src.models.frames import HeaderLayout
from src.utils.checksum import checksum_adjust_bytes, ipv4_header_checksum

MPLS_BOS = 0x100
DEFAULT_MPLS_TTL = 64


class ModifyOutcome(str, Enum):
    APPLIED = 'applied'
    SKIPPED = 'skipped'
    TTL_EXPIRED = 'ttl-expired'


# set_field name -> byte offset inside the IPv4 header, or (ip_proto, offset) inside L4
_IPV4_FIELDS = {'ipv4_src': 12, 'ipv4_dst': 16}
_L4_FIELDS = {
    'tcp_src': (IP_PROTO_TCP, 0), 'tcp_dst': (IP_PROTO_TCP, 2),
    'udp_src': (IP_PROTO_UDP, 0), 'udp_dst': (IP_PROTO_UDP, 2),
}
_L4_CHECKSUM_OFFSET = {IP_PROTO_TCP: 16, IP_PROTO_UDP: 6}


def _refresh_ipv4_checksum(data, layout):
    start = layout.l3_offset
    header = data[start:start + layout.l3_len]
    data[start + 10:start + 12] = ipv4_header_checksum(header).to_bytes(2, 'big')


def _adjust_l4_checksum(data, layout, old, new):
    """Fold a pseudo-header or port change into the TCP/UDP checksum"""
    if layout.l4_offset is None:
        return
    at = layout.l4_offset + _L4_CHECKSUM_OFFSET[layout.l4_proto]
    (current,) = struct.unpack_from('!H', data, at)
    if layout.l4_proto == IP_PROTO_UDP and current == 0:
        return
    updated = checksum_adjust_bytes(current, old, new)
    if layout.l4_proto == IP_PROTO_UDP and updated == 0:
        updated = 0xFFFF
    struct.pack_into('!H', data, at, updated)


def push_vlan(data: bytearray, layout: HeaderLayout, ethertype):
    # The new outer tag copies the TCI of the current outer tag, if any
    tci = b'\x00\x00'
    if layout.vlan_offsets:
        first = layout.vlan_offsets[0]
        tci = bytes(data[first:first + 2])
    data[12:12] = ethertype.to_bytes(2, 'big') + tci
    return ModifyOutcome.APPLIED


def pop_vlan(data: bytearray, layout: HeaderLayout):
    if not layout.vlan_offsets:
        return ModifyOutcome.SKIPPED
    tci_at = layout.vlan_offsets[0]
    del data[tci_at - 2:tci_at + 2]
    return ModifyOutcome.APPLIED


def push_mpls(data: bytearray, layout: HeaderLayout, ethertype):
    insert_at = layout.ethertype_offset + 2
    if layout.mpls_offsets:
        (outer,) = struct.unpack_from('!I', data, layout.mpls_offsets[0])
        shim = outer & ~MPLS_BOS
    else:
        ttl = data[layout.l3_offset + 8] if layout.l3_offset is not None else DEFAULT_MPLS_TTL
        shim = MPLS_BOS | ttl
    data[insert_at:insert_at] = struct.pack('!I', shim)
    struct.pack_into('!H', data, layout.ethertype_offset, ethertype)
    return ModifyOutcome.APPLIED


def pop_mpls(data: bytearray, layout: HeaderLayout, ethertype):
    if not layout.mpls_offsets:
        return ModifyOutcome.SKIPPED
    first = layout.mpls_offsets[0]
    del data[first:first + TAG_LEN]
    struct.pack_into('!H', data, layout.ethertype_offset, ethertype)
    return ModifyOutcome.APPLIED


def set_nw_ttl(data: bytearray, layout: HeaderLayout, ttl=None):
    """Set the IPv4 TTL, or decrement it when ttl is None"""
    if layout.l3_offset is None:
        return ModifyOutcome.SKIPPED
    at = layout.l3_offset + 8
    if ttl is None:
        if data[at] <= 1:
            return ModifyOutcome.TTL_EXPIRED
        ttl = data[at] - 1
    data[at] = ttl & 0xFF
    _refresh_ipv4_checksum(data, layout)
    return ModifyOutcome.APPLIED


def set_mpls_ttl(data: bytearray, layout: HeaderLayout, ttl=None):
    """Set the outermost MPLS TTL, or decrement it when ttl is None"""
    if not layout.mpls_offsets:
        return ModifyOutcome.SKIPPED
    at = layout.mpls_offsets[0] + 3
    if ttl is None:
        if data[at] <= 1:
            return ModifyOutcome.TTL_EXPIRED
        ttl = data[at] - 1
    data[at] = ttl & 0xFF
    return ModifyOutcome.APPLIED


def set_field(data: bytearray, layout: HeaderLayout, name, value):
    """
    Overwrite one header field in place

    Returns:
        ModifyOutcome: SKIPPED when the frame lacks the header carrying the field
    """
    if name == 'eth_dst':
        data[0:6] = (value & 0xFFFFFFFFFFFF).to_bytes(6, 'big')
    elif name == 'eth_src':
        data[6:12] = (value & 0xFFFFFFFFFFFF).to_bytes(6, 'big')
    elif name == 'eth_type':
        struct.pack_into('!H', data, layout.ethertype_offset, value & 0xFFFF)
    elif name in ('vlan_vid', 'vlan_pcp'):
        if not layout.vlan_offsets:
            return ModifyOutcome.SKIPPED
        at = layout.vlan_offsets[0]
        (tci,) = struct.unpack_from('!H', data, at)
        if name == 'vlan_vid':
            tci = (tci & 0xF000) | (value & 0x0FFF)
        else:
            tci = (tci & 0x1FFF) | ((value & 0x7) << 13)
        struct.pack_into('!H', data, at, tci)
    elif name in ('mpls_label', 'mpls_tc'):
        if not layout.mpls_offsets:
            return ModifyOutcome.SKIPPED
        at = layout.mpls_offsets[0]
        (shim,) = struct.unpack_from('!I', data, at)
        if name == 'mpls_label':
            shim = (shim & 0xFFF) | ((value & 0xFFFFF) << 12)
        else:
            shim = (shim & ~0xE00) | ((value & 0x7) << 9)
        struct.pack_into('!I', data, at, shim & 0xFFFFFFFF)
    elif name in _IPV4_FIELDS:
        if layout.l3_offset is None:
            return ModifyOutcome.SKIPPED
        at = layout.l3_offset + _IPV4_FIELDS[name]
        old = bytes(data[at:at + 4])
        new = (value & 0xFFFFFFFF).to_bytes(4, 'big')
        data[at:at + 4] = new
        _refresh_ipv4_checksum(data, layout)
        _adjust_l4_checksum(data, layout, old, new)
    elif name == 'ip_dscp':
        if layout.l3_offset is None:
            return ModifyOutcome.SKIPPED
        at = layout.l3_offset + 1
        data[at] = ((value & 0x3F) << 2) | (data[at] & 0x3)
        _refresh_ipv4_checksum(data, layout)
    elif name in _L4_FIELDS:
        proto, offset = _L4_FIELDS[name]
        if layout.l4_offset is None or layout.l4_proto != proto:
            return ModifyOutcome.SKIPPED
        at = layout.l4_offset + offset
        old = bytes(data[at:at + 2])
        new = (value & 0xFFFF).to_bytes(2, 'big')
        data[at:at + 2] = new
        _adjust_l4_checksum(data, layout, old, new)
    else:
        return ModifyOutcome.SKIPPED
    return ModifyOutcome.APPLIED


def apply(data: bytearray, layout: HeaderLayout, action: Action) -> ModifyOutcome:
    """Apply one non-output action"""
    kind = action.kind
    if kind == ActionType.PUSH_VLAN:
        return push_vlan(data, layout, action.ethertype)
    if kind == ActionType.POP_VLAN:
        return pop_vlan(data, layout)
    if kind == ActionType.PUSH_MPLS:
        return push_mpls(data, layout, action.ethertype or ETH_TYPE_MPLS)
    if kind == ActionType.POP_MPLS:
        return pop_mpls(data, layout, action.ethertype)
    if kind == ActionType.SET_NW_TTL:
        return set_nw_ttl(data, layout, action.ttl)
    if kind == ActionType.DEC_NW_TTL:
        return set_nw_ttl(data, layout)
    if kind == ActionType.SET_MPLS_TTL:
        return set_mpls_ttl(data, layout, action.ttl)
    if kind == ActionType.DEC_MPLS_TTL:
        return set_mpls_ttl(data, layout)
    if kind == ActionType.SET_FIELD:
        return set_field(data, layout, action.field, action.value)
    return ModifyOutcome.SKIPPED


STRUCTURAL = frozenset({ActionType.PUSH_VLAN, ActionType.POP_VLAN, ActionType.PUSH_MPLS, ActionType.POP_MPLS})

