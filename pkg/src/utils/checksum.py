"""
Internet checksum helpers (full and incremental)
"""


def _fold(total):
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return total


def internet_checksum(data):
    """
    One's-complement checksum over 16-bit words

    Args:
        data: Octets (odd lengths are padded with a zero byte)

    Returns:
        int: 16-bit checksum
    """
    if len(data) % 2:
        data = bytes(data) + b'\x00'
    total = sum(int.from_bytes(data[i:i + 2], 'big') for i in range(0, len(data), 2))
    return ~_fold(total) & 0xFFFF


def ipv4_header_checksum(header):
    """Checksum of an IPv4 header, ignoring the checksum field already present"""
    header = bytearray(header)
    header[10:12] = b'\x00\x00'
    return internet_checksum(header)


def checksum_adjust(checksum, old, new):
    """
    Incrementally update a checksum after one word changed

    HC' = ~(~HC + ~m + m'), the form that never yields a spurious 0xFFFF/0 flip.

    Args:
        checksum: Current 16-bit checksum
        old: Old 16-bit word
        new: New 16-bit word

    Returns:
        int: Updated 16-bit checksum
    """
    total = (~checksum & 0xFFFF) + (~old & 0xFFFF) + (new & 0xFFFF)
    return ~_fold(total) & 0xFFFF


def checksum_adjust_bytes(checksum, old, new):
    """Apply checksum_adjust word by word over two equal-length byte strings"""
    if len(old) % 2:
        old, new = bytes(old) + b'\x00', bytes(new) + b'\x00'
    for i in range(0, len(old), 2):
        checksum = checksum_adjust(
            checksum, int.from_bytes(old[i:i + 2], 'big'), int.from_bytes(new[i:i + 2], 'big'))
    return checksum
