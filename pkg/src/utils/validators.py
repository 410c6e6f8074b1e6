"""
Configuration validation utilities
"""


def validate_positive_int(name, value, minimum=1, maximum=None):
    """
    Validate that a value is an integer within range

    Args:
        name: Setting name used in the error message
        value: Value to validate
        minimum: Smallest accepted value
        maximum: Largest accepted value (None = unbounded)

    Returns:
        tuple: (is_valid, error_message)
    """
    if isinstance(value, bool) or not isinstance(value, int):
        return False, f"{name} must be an integer, got {value!r}"
    if value < minimum:
        return False, f"{name} must be >= {minimum}, got {value}"
    if maximum is not None and value > maximum:
        return False, f"{name} must be <= {maximum}, got {value}"
    return True, None


def validate_non_negative_float(name, value):
    """
    Validate a duration-like float

    Returns:
        tuple: (is_valid, error_message)
    """
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return False, f"{name} must be a number, got {value!r}"
    if value < 0:
        return False, f"{name} must not be negative, got {value}"
    return True, None


def validate_choice(name, value, choices):
    """
    Validate that a value is one of a fixed set

    Returns:
        tuple: (is_valid, error_message)
    """
    if value not in choices:
        return False, f"{name} must be one of {', '.join(sorted(map(str, choices)))}, got {value!r}"
    return True, None


def validate_tcp_port(name, value):
    """
    Validate a TCP port number

    Returns:
        tuple: (is_valid, error_message)
    """
    return validate_positive_int(name, value, minimum=1, maximum=65535)


def validate_host(name, value):
    """
    Validate that a host setting is a non-empty string

    Returns:
        tuple: (is_valid, error_message)
    """
    if not isinstance(value, str) or not value.strip():
        return False, f"{name} must be a non-empty host name or address"
    return True, None


def validate_frame_size(size, minimum=64, maximum=9216):
    """
    Validate a generated frame size

    Returns:
        tuple: (is_valid, error_message)
    """
    return validate_positive_int('frame size', size, minimum=minimum, maximum=maximum)
