"""
Normalization of addresses and numbers given as text
"""


def normalize_string(value, default=''):
    """
    Basic string normalization: convert to string and strip whitespace

    Args:
        value: Input value (any type)
        default: Default value if input is None or empty

    Returns:
        str: Normalized string
    """
    if value is None:
        return default

    result = str(value).strip()
    return result if result else default


def parse_int(value):
    """
    Integer from decimal, 0x-hex or 0b-binary text

    Raises:
        ValueError: not an integer
    """
    if isinstance(value, int) and not isinstance(value, bool):
        return value
    return int(normalize_string(value).replace('_', ''), 0)


def parse_mac(value):
    """
    MAC address from aa:bb:cc:dd:ee:ff, aa-bb-..., aabb.ccdd.eeff or an int

    Raises:
        ValueError: malformed address
    """
    if isinstance(value, int):
        if not 0 <= value < 1 << 48:
            raise ValueError(f'MAC address out of range: {value:#x}')
        return value
    digits = ''.join(c for c in normalize_string(value) if c not in ':-.')
    if len(digits) != 12:
        raise ValueError(f'malformed MAC address {value!r}')
    return int(digits, 16)


def format_mac(value):
    return ':'.join(f'{b:02x}' for b in value.to_bytes(6, 'big'))


def parse_hex_bytes(text):
    """
    Octets from hex text; whitespace, colons and a 0x prefix are ignored

    Raises:
        ValueError: odd digit count or non-hex characters
    """
    cleaned = normalize_string(text)
    if cleaned.lower().startswith('0x'):
        cleaned = cleaned[2:]
    cleaned = ''.join(c for c in cleaned if not c.isspace() and c != ':')
    return bytes.fromhex(cleaned)


def hex_dump(data, width=16):
    """Offset + hex lines for a byte string"""
    lines = []
    for offset in range(0, len(data), width):
        chunk = data[offset:offset + width]
        lines.append(f'{offset:04x}  {chunk.hex(" ")}')
    return '\n'.join(lines)
