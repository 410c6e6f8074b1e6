"""
OpenFlow 1.3.1 protocol constants (subset used by the agent)
"""

from enum import IntEnum

OFP_VERSION = 0x04
OFP_HEADER_LEN = 8
OFP_MAX_MESSAGE_LEN = 0xFFFF
OFP_DEFAULT_PORT = 6633

OFP_NO_BUFFER = 0xFFFFFFFF
OFPTT_ALL = 0xFF
OFPG_ANY = 0xFFFFFFFF
OFPQ_ALL = 0xFFFFFFFF
OFPCML_NO_BUFFER = 0xFFFF

OFPP_MAX = 0xFFFFFF00
OFPP_IN_PORT = 0xFFFFFFF8
OFPP_TABLE = 0xFFFFFFF9
OFPP_FLOOD = 0xFFFFFFFB
OFPP_ALL = 0xFFFFFFFC
OFPP_CONTROLLER = 0xFFFFFFFD
OFPP_LOCAL = 0xFFFFFFFE
OFPP_ANY = 0xFFFFFFFF


class MsgType(IntEnum):
    HELLO = 0
    ERROR = 1
    ECHO_REQUEST = 2
    ECHO_REPLY = 3
    FEATURES_REQUEST = 5
    FEATURES_REPLY = 6
    GET_CONFIG_REQUEST = 7
    GET_CONFIG_REPLY = 8
    SET_CONFIG = 9
    PACKET_IN = 10
    FLOW_REMOVED = 11
    PACKET_OUT = 13
    FLOW_MOD = 14
    TABLE_MOD = 17
    MULTIPART_REQUEST = 18
    MULTIPART_REPLY = 19
    BARRIER_REQUEST = 20
    BARRIER_REPLY = 21


class ErrorType(IntEnum):
    HELLO_FAILED = 0
    BAD_REQUEST = 1
    BAD_ACTION = 2
    BAD_INSTRUCTION = 3
    BAD_MATCH = 4
    FLOW_MOD_FAILED = 5
    TABLE_MOD_FAILED = 8
    SWITCH_CONFIG_FAILED = 10


class HelloFailedCode(IntEnum):
    INCOMPATIBLE = 0
    EPERM = 1


class BadRequestCode(IntEnum):
    BAD_VERSION = 0
    BAD_TYPE = 1
    BAD_MULTIPART = 2
    EPERM = 5
    BAD_LEN = 6
    BUFFER_EMPTY = 7
    BUFFER_UNKNOWN = 8
    BAD_TABLE_ID = 9
    BAD_PORT = 11
    BAD_PACKET = 12


class BadActionCode(IntEnum):
    BAD_TYPE = 0
    BAD_LEN = 1
    BAD_OUT_PORT = 4
    BAD_ARGUMENT = 5
    BAD_SET_TYPE = 13
    BAD_SET_LEN = 14


class BadInstructionCode(IntEnum):
    UNKNOWN_INST = 0
    UNSUP_INST = 1
    BAD_TABLE_ID = 2
    BAD_LEN = 7
    DUP_INST = 9


class BadMatchCode(IntEnum):
    BAD_TYPE = 0
    BAD_LEN = 1
    BAD_FIELD = 6
    BAD_VALUE = 7
    BAD_PREREQ = 9
    DUP_FIELD = 10


class FlowModFailedCode(IntEnum):
    UNKNOWN = 0
    TABLE_FULL = 1
    BAD_TABLE_ID = 2
    OVERLAP = 3
    BAD_COMMAND = 6


class TableModFailedCode(IntEnum):
    BAD_TABLE = 0
    BAD_CONFIG = 1


class PacketInReason(IntEnum):
    NO_MATCH = 0
    ACTION = 1
    INVALID_TTL = 2


class InstructionType(IntEnum):
    GOTO_TABLE = 1
    WRITE_METADATA = 2
    WRITE_ACTIONS = 3
    APPLY_ACTIONS = 4
    CLEAR_ACTIONS = 5
    METER = 6


class MultipartType(IntEnum):
    DESC = 0
    FLOW = 1
    AGGREGATE = 2
    TABLE = 3
    PORT_STATS = 4
    QUEUE = 5
    PORT_DESC = 13


OFPMPF_REPLY_MORE = 1 << 0

# Switch capabilities
OFPC_FLOW_STATS = 1 << 0
OFPC_TABLE_STATS = 1 << 1
OFPC_PORT_STATS = 1 << 2
OFPC_QUEUE_STATS = 1 << 6

# Table config bits (OpenFlow 1.1 table-miss semantics)
OFPTC_TABLE_MISS_CONTROLLER = 0
OFPTC_TABLE_MISS_CONTINUE = 1
OFPTC_TABLE_MISS_DROP = 2
OFPTC_TABLE_MISS_MASK = 3

OFPMT_OXM = 1
OFPXMC_OPENFLOW_BASIC = 0x8000
OFPHET_VERSIONBITMAP = 1

# OXM OPENFLOW_BASIC field codes -> (match field name, payload bytes)
OXM_FIELDS = {
    0: ('in_port', 4),
    3: ('eth_dst', 6),
    4: ('eth_src', 6),
    5: ('eth_type', 2),
    6: ('vlan_vid', 2),
    7: ('vlan_pcp', 1),
    8: ('ip_dscp', 1),
    10: ('ip_proto', 1),
    11: ('ipv4_src', 4),
    12: ('ipv4_dst', 4),
    13: ('tcp_src', 2),
    14: ('tcp_dst', 2),
    15: ('udp_src', 2),
    16: ('udp_dst', 2),
    34: ('mpls_label', 4),
    35: ('mpls_tc', 1),
}
OXM_CODES = {name: (code, size) for code, (name, size) in OXM_FIELDS.items()}
