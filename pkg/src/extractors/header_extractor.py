"""
Header extraction over the fixed parser graph

Ethernet -> {802.1Q x2, MPLS x4} -> IPv4 -> {TCP, UDP}

Branch selection is driven by EtherType and the IPv4 protocol field; the
IPv4 payload offset comes from IHL. Structural contradictions never raise,
they are recorded as MaliciousReason values on the returned tuple.
"""

from __future__ import annotations

import struct

from src.models.frames import (
    ETH_HEADER_LEN,
    HeaderLayout,
    HeaderTuple,
    MaliciousReason,
    RawFrame,
)

ETH_TYPE_IPV4 = 0x0800
ETH_TYPE_VLAN = 0x8100
ETH_TYPE_QINQ = 0x88A8
ETH_TYPE_MPLS = 0x8847
ETH_TYPE_MPLS_MCAST = 0x8848

VLAN_TPIDS = (ETH_TYPE_VLAN, ETH_TYPE_QINQ)
MPLS_TYPES = (ETH_TYPE_MPLS, ETH_TYPE_MPLS_MCAST)

IP_PROTO_TCP = 6
IP_PROTO_UDP = 17

# Parser depth limits, fixed per build
MAX_VLAN_TAGS = 2
MAX_MPLS_LABELS = 4

IPV4_MIN_HEADER = 20
TAG_LEN = 4
L4_HEADER_LEN = {IP_PROTO_TCP: 20, IP_PROTO_UDP: 8}


def _walk(data, in_port):
    """
    Walk the parser graph once

    Args:
        data: Frame octets
        in_port: Ingress port index

    Returns:
        tuple: (fields dict for HeaderTuple, HeaderLayout, list of reasons)
    """
    fields = {'in_port': in_port}
    reasons = []
    size = len(data)

    if size < ETH_HEADER_LEN:
        return fields, HeaderLayout(header_len=0), [MaliciousReason.TRUNCATED_HEADER]

    fields['eth_dst'] = int.from_bytes(data[0:6], 'big')
    fields['eth_src'] = int.from_bytes(data[6:12], 'big')
    eth_type = int.from_bytes(data[12:14], 'big')
    ethertype_offset = 12
    offset = ETH_HEADER_LEN

    vlan_offsets = []
    while eth_type in VLAN_TPIDS and len(vlan_offsets) < MAX_VLAN_TAGS:
        if offset + TAG_LEN > size:
            reasons.append(MaliciousReason.TRUNCATED_HEADER)
            break
        tci, next_type = struct.unpack_from('!HH', data, offset)
        if not vlan_offsets:
            fields['vlan_pcp'] = tci >> 13
            fields['vlan_vid'] = tci & 0x0FFF
        vlan_offsets.append(offset)
        ethertype_offset = offset + 2
        eth_type = next_type
        offset += TAG_LEN

    fields['eth_type'] = eth_type
    layout = dict(ethertype_offset=ethertype_offset, vlan_offsets=tuple(vlan_offsets))

    if reasons:
        return fields, HeaderLayout(header_len=offset, **layout), reasons

    reach_ipv4 = eth_type == ETH_TYPE_IPV4
    ip_must_match_type = True

    if eth_type in MPLS_TYPES:
        mpls_offsets = []
        bottom = False
        while len(mpls_offsets) < MAX_MPLS_LABELS:
            if offset + TAG_LEN > size:
                reasons.append(MaliciousReason.TRUNCATED_HEADER)
                break
            (shim,) = struct.unpack_from('!I', data, offset)
            if not mpls_offsets:
                fields['mpls_label'] = shim >> 12
                fields['mpls_tc'] = (shim >> 9) & 0x7
            mpls_offsets.append(offset)
            offset += TAG_LEN
            if shim & 0x100:
                bottom = True
                break
        layout['mpls_offsets'] = tuple(mpls_offsets)
        if not reasons and not bottom:
            reasons.append(MaliciousReason.MPLS_STACK_OVERFLOW)
        if not reasons and offset >= size:
            reasons.append(MaliciousReason.TRUNCATED_HEADER)
        if reasons:
            return fields, HeaderLayout(header_len=offset, **layout), reasons
        # No EtherType below the stack: an IPv4 version nibble selects the branch
        reach_ipv4 = offset < size and data[offset] >> 4 == 4
        ip_must_match_type = False

    if not reach_ipv4:
        return fields, HeaderLayout(header_len=offset, **layout), reasons

    l3_offset = offset
    if size - l3_offset < IPV4_MIN_HEADER:
        reasons.append(MaliciousReason.TRUNCATED_HEADER)
        return fields, HeaderLayout(header_len=offset, **layout), reasons

    version_ihl, tos, total_length, _ident, frag = struct.unpack_from('!BBHHH', data, l3_offset)
    version, ihl = version_ihl >> 4, version_ihl & 0x0F
    if version != 4 and ip_must_match_type:
        reasons.append(MaliciousReason.IP_VERSION_MISMATCH)
    if ihl < 5:
        reasons.append(MaliciousReason.IHL_TOO_SMALL)
        return fields, HeaderLayout(header_len=offset, **layout), reasons

    ip_header_len = ihl * 4
    if l3_offset + ip_header_len > size:
        reasons.append(MaliciousReason.TRUNCATED_HEADER)
        return fields, HeaderLayout(header_len=offset, **layout), reasons
    if l3_offset + total_length > size:
        reasons.append(MaliciousReason.LENGTH_EXCEEDS_FRAME)

    proto = data[l3_offset + 9]
    fields['ip_dscp'] = tos >> 2
    fields['ip_proto'] = proto
    fields['ipv4_src'] = int.from_bytes(data[l3_offset + 12:l3_offset + 16], 'big')
    fields['ipv4_dst'] = int.from_bytes(data[l3_offset + 16:l3_offset + 20], 'big')
    offset = l3_offset + ip_header_len
    layout.update(l3_offset=l3_offset, l3_len=ip_header_len)

    # Non-first fragments carry no L4 header
    if frag & 0x1FFF or proto not in L4_HEADER_LEN:
        return fields, HeaderLayout(header_len=offset, **layout), reasons

    l4_len = L4_HEADER_LEN[proto]
    if offset + l4_len > size:
        reasons.append(MaliciousReason.TRUNCATED_HEADER)
        return fields, HeaderLayout(header_len=offset, **layout), reasons

    fields['l4_src'], fields['l4_dst'] = struct.unpack_from('!HH', data, offset)
    layout.update(l4_offset=offset, l4_proto=proto)
    return fields, HeaderLayout(header_len=offset + l4_len, **layout), reasons


def parse(frame: RawFrame) -> HeaderTuple:
    """
    Extract the match tuple from a frame

    Args:
        frame: RawFrame to parse

    Returns:
        HeaderTuple: populated per the parser graph; malformed frames are
        flagged through HeaderTuple.reasons, never raised
    """
    fields, layout, reasons = _walk(frame.data, frame.ingress_port)
    return HeaderTuple(header_len=layout.header_len, reasons=tuple(reasons), **fields)


def malicious_reasons(frame: RawFrame) -> list[MaliciousReason]:
    """Every structural violation detected in the frame, in parse order"""
    _, _, reasons = _walk(frame.data, frame.ingress_port)
    return list(reasons)


def extract_layout(data) -> HeaderLayout:
    """Header offsets of a frame, used by the packet modifier"""
    _, layout, _ = _walk(data, 0)
    return layout
