"""
Frame and header-tuple models
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

ETH_HEADER_LEN = 14
MIN_FRAME_LEN = 14
MAX_FRAME_LEN = 9216


class MaliciousReason(str, Enum):
    """Structural violations detected by the header extractor"""

    IHL_TOO_SMALL = 'ihl-too-small'
    LENGTH_EXCEEDS_FRAME = 'length-exceeds-frame'
    TRUNCATED_HEADER = 'truncated-header'
    MPLS_STACK_OVERFLOW = 'mpls-stack-overflow'
    IP_VERSION_MISMATCH = 'ip-version-mismatch'


@dataclass(frozen=True)
class RawFrame:
    """
    A frame as it enters the switch

    Attributes:
        ingress_port: 0-based port index
        data: Frame octets, Ethernet header first
        arrived_at: Monotonic arrival timestamp in nanoseconds
    """

    ingress_port: int
    data: bytes
    arrived_at: int = field(default_factory=time.monotonic_ns)

    def __len__(self):
        return len(self.data)


@dataclass(frozen=True)
class HeaderLayout:
    """
    Byte offsets discovered while walking the parser graph

    Offsets are None when the header is not present. vlan_offsets and
    mpls_offsets list every tag/label, outermost first.
    """

    ethertype_offset: int = 12
    vlan_offsets: tuple[int, ...] = ()
    mpls_offsets: tuple[int, ...] = ()
    l3_offset: Optional[int] = None
    l3_len: int = 0
    l4_offset: Optional[int] = None
    l4_proto: Optional[int] = None
    header_len: int = 0


@dataclass(frozen=True)
class HeaderTuple:
    """
    Match-field vector extracted from a frame

    Optional fields are None unless the parser reached the header that
    carries them. reasons lists every structural violation; a tuple is
    malicious exactly when reasons is non-empty.
    """

    in_port: int
    eth_dst: int = 0
    eth_src: int = 0
    eth_type: int = 0
    vlan_vid: Optional[int] = None
    vlan_pcp: Optional[int] = None
    mpls_label: Optional[int] = None
    mpls_tc: Optional[int] = None
    ip_proto: Optional[int] = None
    ipv4_src: Optional[int] = None
    ipv4_dst: Optional[int] = None
    ip_dscp: Optional[int] = None
    l4_src: Optional[int] = None
    l4_dst: Optional[int] = None
    header_len: int = 0
    reasons: tuple[MaliciousReason, ...] = ()

    @property
    def malicious(self) -> bool:
        return bool(self.reasons)
