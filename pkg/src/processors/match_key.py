"""
Match-key layout

The key is a fixed concatenation of byte-aligned fields built from a
HeaderTuple. A leading presence byte records which optional headers the
parser reached, so a constraint on (say) ipv4_dst only matches frames that
actually carry IPv4. Absent optional fields serialize as zero; entries
leave fields they do not constrain as don't-care.
"""

from __future__ import annotations

from src.models.errors import MessageError
from src.models.flow import MaskedKey, MatchField
from src.models.frames import HeaderTuple
from src.openflow.constants import BadMatchCode, ErrorType

OFPVID_PRESENT = 0x1000

PRESENT_VLAN = 0x01
PRESENT_MPLS = 0x02
PRESENT_IPV4 = 0x04
PRESENT_L4 = 0x08

# (name, width in bytes), most significant first
KEY_FIELDS = (
    ('present', 1),
    ('in_port', 4),
    ('eth_dst', 6),
    ('eth_src', 6),
    ('eth_type', 2),
    ('vlan_vid', 2),
    ('vlan_pcp', 1),
    ('mpls_label', 3),
    ('mpls_tc', 1),
    ('ip_proto', 1),
    ('ipv4_src', 4),
    ('ipv4_dst', 4),
    ('ip_dscp', 1),
    ('l4_src', 2),
    ('l4_dst', 2),
)

KEY_WIDTH = 8 * sum(width for _, width in KEY_FIELDS)

FIELD_SHIFT = {}
FIELD_WIDTH = {}
_shift = KEY_WIDTH
for _name, _width in KEY_FIELDS:
    _shift -= 8 * _width
    FIELD_SHIFT[_name] = _shift
    FIELD_WIDTH[_name] = 8 * _width

# Bit widths the protocol allows per field (values wider than this are rejected)
FIELD_BITS = {
    'in_port': 32, 'eth_dst': 48, 'eth_src': 48, 'eth_type': 16, 'vlan_vid': 13,
    'vlan_pcp': 3, 'mpls_label': 20, 'mpls_tc': 3, 'ip_proto': 8, 'ipv4_src': 32,
    'ipv4_dst': 32, 'ip_dscp': 6, 'l4_src': 16, 'l4_dst': 16,
}

# Controller-facing names that fold onto a key field
FIELD_ALIASES = {'tcp_src': 'l4_src', 'tcp_dst': 'l4_dst', 'udp_src': 'l4_src', 'udp_dst': 'l4_dst'}

# field -> (field it depends on, values that field must be matched exactly to)
PREREQUISITES = {
    'ip_proto': ('eth_type', (0x0800,)),
    'ipv4_src': ('eth_type', (0x0800,)),
    'ipv4_dst': ('eth_type', (0x0800,)),
    'ip_dscp': ('eth_type', (0x0800,)),
    'mpls_label': ('eth_type', (0x8847, 0x8848)),
    'mpls_tc': ('eth_type', (0x8847, 0x8848)),
    'tcp_src': ('ip_proto', (6,)),
    'tcp_dst': ('ip_proto', (6,)),
    'udp_src': ('ip_proto', (17,)),
    'udp_dst': ('ip_proto', (17,)),
}

_PRESENCE = {
    'vlan_pcp': PRESENT_VLAN,
    'mpls_label': PRESENT_MPLS, 'mpls_tc': PRESENT_MPLS,
    'ip_proto': PRESENT_IPV4, 'ipv4_src': PRESENT_IPV4, 'ipv4_dst': PRESENT_IPV4,
    'ip_dscp': PRESENT_IPV4,
    'l4_src': PRESENT_L4, 'l4_dst': PRESENT_L4,
}


def _place(name, value):
    return (value & ((1 << FIELD_WIDTH[name]) - 1)) << FIELD_SHIFT[name]


def tuple_to_key(header: HeaderTuple) -> int:
    """
    Serialize a HeaderTuple into the K-bit lookup key

    Args:
        header: Parsed HeaderTuple

    Returns:
        int: Key value
    """
    present = 0
    key = _place('in_port', header.in_port)
    key |= _place('eth_dst', header.eth_dst)
    key |= _place('eth_src', header.eth_src)
    key |= _place('eth_type', header.eth_type)

    if header.vlan_vid is not None:
        present |= PRESENT_VLAN
        key |= _place('vlan_vid', OFPVID_PRESENT | header.vlan_vid)
        key |= _place('vlan_pcp', header.vlan_pcp)
    if header.mpls_label is not None:
        present |= PRESENT_MPLS
        key |= _place('mpls_label', header.mpls_label)
        key |= _place('mpls_tc', header.mpls_tc)
    if header.ipv4_src is not None:
        present |= PRESENT_IPV4
        key |= _place('ip_proto', header.ip_proto)
        key |= _place('ipv4_src', header.ipv4_src)
        key |= _place('ipv4_dst', header.ipv4_dst)
        key |= _place('ip_dscp', header.ip_dscp)
    if header.l4_src is not None:
        present |= PRESENT_L4
        key |= _place('l4_src', header.l4_src)
        key |= _place('l4_dst', header.l4_dst)

    return key | _place('present', present)


def _check_prerequisites(requested, placed):
    def exact(name):
        entry = placed.get(name)
        if entry is None or entry[1] != (1 << FIELD_BITS[name]) - 1:
            return None
        return entry[0]

    for name in requested:
        if name in PREREQUISITES:
            needed, allowed = PREREQUISITES[name]
            if exact(needed) not in allowed:
                wanted = ' or '.join(f'{v:#06x}' if needed == 'eth_type' else str(v) for v in allowed)
                raise MessageError(ErrorType.BAD_MATCH, BadMatchCode.BAD_PREREQ,
                                   f'{name} needs {needed}={wanted}')
        elif name == 'vlan_pcp':
            vid, vid_mask = placed.get('vlan_vid', (0, 0))
            if not vid & vid_mask & OFPVID_PRESENT:
                raise MessageError(ErrorType.BAD_MATCH, BadMatchCode.BAD_PREREQ,
                                   'vlan_pcp needs vlan_vid with OFPVID_PRESENT')


def match_to_key(fields) -> MaskedKey:
    """
    Build the masked key of a flow entry from its match fields

    Prerequisites are not implied: ipv4 fields need eth_type=0x0800, mpls
    fields need an MPLS eth_type, tcp/udp ports need the matching ip_proto
    and vlan_pcp needs a tagged vlan_vid.

    Args:
        fields: Iterable of MatchField

    Returns:
        MaskedKey: canonical key over KEY_WIDTH bits

    Raises:
        MessageError: unknown field, duplicate field, value out of range or
            missing prerequisite (OFPET_BAD_MATCH)
    """
    value = mask = 0
    present_value = present_mask = 0
    requested = []

    placed = {}
    for match_field in fields:
        if match_field.name in requested:
            raise MessageError(ErrorType.BAD_MATCH, BadMatchCode.DUP_FIELD, f'duplicate field {match_field.name}')
        requested.append(match_field.name)
        name = FIELD_ALIASES.get(match_field.name, match_field.name)
        if name not in FIELD_BITS:
            raise MessageError(ErrorType.BAD_MATCH, BadMatchCode.BAD_FIELD, f'unsupported match field {match_field.name}')
        limit = (1 << FIELD_BITS[name]) - 1
        field_mask = limit if match_field.mask is None else match_field.mask & limit
        if match_field.value > limit:
            raise MessageError(ErrorType.BAD_MATCH, BadMatchCode.BAD_VALUE, f'{match_field.name} value out of range')
        field_value = match_field.value & field_mask
        if placed.setdefault(name, (field_value, field_mask)) != (field_value, field_mask):
            raise MessageError(ErrorType.BAD_MATCH, BadMatchCode.BAD_PREREQ, f'conflicting constraints on {name}')
    _check_prerequisites(requested, placed)

    for name, (field_value, field_mask) in placed.items():
        if name == 'vlan_vid':
            # OFPVID_NONE matches untagged frames; the present bit selects tagged ones
            if field_mask & OFPVID_PRESENT:
                present_mask |= PRESENT_VLAN
                if field_value & OFPVID_PRESENT:
                    present_value |= PRESENT_VLAN
        elif name in _PRESENCE:
            present_mask |= _PRESENCE[name]
            present_value |= _PRESENCE[name]
        value |= _place(name, field_value)
        mask |= _place(name, field_mask)

    value |= _place('present', present_value)
    mask |= _place('present', present_mask)
    return MaskedKey.of(value, mask)
