"""
Byte-level frame construction for traffic generation and tests

Builds Ethernet frames with up to two 802.1Q tags, an MPLS label stack,
IPv4 (with options) and a TCP or UDP header. Checksums are filled in.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from typing import Optional

from src.extractors.header_extractor import (
    ETH_TYPE_IPV4,
    ETH_TYPE_MPLS,
    ETH_TYPE_VLAN,
    IP_PROTO_TCP,
    IP_PROTO_UDP,
)
from src.utils.checksum import internet_checksum

MIN_FRAME = 64
MAX_FRAME = 9216
ETH_TYPE_EXPERIMENTAL = 0x88B5

_ETH = struct.Struct('!6s6s')
_IPV4 = struct.Struct('!BBHHHBBH4s4s')
_TCP = struct.Struct('!HHIIBBHHH')
_UDP = struct.Struct('!HHHH')


@dataclass(frozen=True)
class FrameTemplate:
    """
    Header values for a generated frame

    vlan_tags holds (vid, pcp) pairs outermost first; mpls_labels holds
    (label, tc, ttl) triples outermost first. ipv4_src=None builds a non-IP
    frame whose EtherType is eth_type.
    """

    eth_dst: int = 0x020000000002
    eth_src: int = 0x020000000001
    vlan_tags: tuple[tuple[int, int], ...] = ()
    mpls_labels: tuple[tuple[int, int, int], ...] = ()
    ipv4_src: Optional[int] = 0x0A000001
    ipv4_dst: int = 0x0A000002
    ip_proto: int = IP_PROTO_UDP
    ip_dscp: int = 0
    ip_ttl: int = 64
    ip_options: bytes = b''
    ip_frag: int = 0x4000
    l4_src: int = 1024
    l4_dst: int = 80
    eth_type: int = ETH_TYPE_EXPERIMENTAL
    payload: bytes = b''


def _l4_header(t: FrameTemplate, payload: bytes):
    if t.ip_proto == IP_PROTO_TCP:
        return _TCP.pack(t.l4_src, t.l4_dst, 0, 0, 5 << 4, 0x02, 65535, 0, 0)
    if t.ip_proto == IP_PROTO_UDP:
        return _UDP.pack(t.l4_src, t.l4_dst, _UDP.size + len(payload), 0)
    return b''


def _l4_checksum(t: FrameTemplate, segment: bytearray):
    pseudo = struct.pack('!4s4sBBH', t.ipv4_src.to_bytes(4, 'big'), t.ipv4_dst.to_bytes(4, 'big'),
                         0, t.ip_proto, len(segment))
    checksum = internet_checksum(pseudo + bytes(segment))
    if t.ip_proto == IP_PROTO_TCP:
        segment[16:18] = checksum.to_bytes(2, 'big')
    elif t.ip_proto == IP_PROTO_UDP:
        segment[6:8] = (checksum or 0xFFFF).to_bytes(2, 'big')


def header_length(template: FrameTemplate):
    """Bytes before the payload"""
    return len(build_frame(replace(template, payload=b'')))


def build_frame(template: FrameTemplate = FrameTemplate(), size=None) -> bytes:
    """
    Serialize a template into frame octets

    Args:
        template: Header values
        size: Total frame length; the payload is zero-filled (or cut) to fit

    Returns:
        bytes: The frame (no FCS)

    Raises:
        ValueError: size smaller than the headers
    """
    t = template
    if len(t.ip_options) % 4 or len(t.ip_options) > 40:
        raise ValueError(f'IPv4 options must be a multiple of 4 up to 40 bytes (got {len(t.ip_options)})')

    l2 = bytearray(_ETH.pack(t.eth_dst.to_bytes(6, 'big'), t.eth_src.to_bytes(6, 'big')))
    for vid, pcp in t.vlan_tags:
        l2 += struct.pack('!HH', ETH_TYPE_VLAN, (pcp & 0x7) << 13 | (vid & 0xFFF))
    if t.mpls_labels:
        inner_type = ETH_TYPE_MPLS
    elif t.ipv4_src is not None:
        inner_type = ETH_TYPE_IPV4
    else:
        inner_type = t.eth_type
    l2 += struct.pack('!H', inner_type)
    for index, (label, tc, ttl) in enumerate(t.mpls_labels):
        bos = 1 if index == len(t.mpls_labels) - 1 else 0
        l2 += struct.pack('!I', (label & 0xFFFFF) << 12 | (tc & 0x7) << 9 | bos << 8 | (ttl & 0xFF))

    if t.ipv4_src is None:
        frame = bytes(l2) + t.payload
        return _fit(frame, len(l2), size)

    payload = t.payload
    if size is not None:
        headers = len(l2) + _IPV4.size + len(t.ip_options) + len(_l4_header(t, b''))
        if size < headers:
            raise ValueError(f'frame size {size} is below the {headers}-byte header stack')
        payload = (payload + bytes(size - headers))[:size - headers]

    segment = bytearray(_l4_header(t, payload) + payload)
    if t.ip_frag & 0x1FFF == 0:
        _l4_checksum(t, segment)

    ihl = 5 + len(t.ip_options) // 4
    ip = bytearray(_IPV4.pack(
        0x40 | ihl, (t.ip_dscp & 0x3F) << 2, ihl * 4 + len(segment), 0, t.ip_frag, t.ip_ttl, t.ip_proto, 0,
        t.ipv4_src.to_bytes(4, 'big'), t.ipv4_dst.to_bytes(4, 'big'),
    ) + t.ip_options)
    ip[10:12] = internet_checksum(ip).to_bytes(2, 'big')
    return bytes(l2) + bytes(ip) + bytes(segment)


def _fit(frame, header_len, size):
    if size is None:
        return frame
    if size < header_len:
        raise ValueError(f'frame size {size} is below the {header_len}-byte header stack')
    return (frame + bytes(size - len(frame)))[:size]
