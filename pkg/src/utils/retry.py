"""
Retry and backoff utilities
"""

import random


def calculate_backoff(attempt, initial_backoff=1, max_backoff=None, rng=random):
    """
    Calculate exponential backoff time with jitter

    Args:
        attempt: Current attempt number (0-based)
        initial_backoff: Base backoff time in seconds
        max_backoff: Upper bound before jitter (None = unbounded)
        rng: Source of randomness (anything with random())

    Returns:
        float: Wait time in seconds
    """
    # Exponential backoff: 2^attempt
    base_wait = initial_backoff * (2 ** attempt)
    if max_backoff is not None:
        base_wait = min(base_wait, max_backoff)

    # Add jitter (±25% random variation)
    jitter = base_wait * 0.25 * (rng.random() * 2 - 1)

    return base_wait + jitter
