"""
Input arbiter: picks the next input queue to serve
"""

from __future__ import annotations

from typing import Optional, Sequence


class InputArbiter:
    """
    Load-aware input arbiter

    longest-queue: the fullest non-empty queue wins, ties go round-robin
    starting after the last-served port. A non-empty port passed over
    max_wait times in a row is served next regardless of occupancy.
    round-robin: next non-empty port after the last-served one.

    Args:
        port_count: Number of ports
        policy: 'longest-queue' or 'round-robin'
        max_wait: Bounded-waiting limit (0 disables the guard)
    """

    def __init__(self, port_count, policy='longest-queue', max_wait=0):
        if policy not in ('longest-queue', 'round-robin'):
            raise ValueError(f'unknown arbiter policy {policy!r}')
        self.port_count = port_count
        self.policy = policy
        self.max_wait = max_wait
        self.last_served = port_count - 1
        self.waits = [0] * port_count
        self.served = [0] * port_count

    def _rr_order(self):
        start = self.last_served + 1
        return [(start + i) % self.port_count for i in range(self.port_count)]

    def select(self, occupancies: Sequence[int]) -> Optional[int]:
        """
        Choose a port given current input occupancies

        Returns:
            int: Port index, or None when every queue is empty
        """
        order = [p for p in self._rr_order() if occupancies[p] > 0]
        if not order:
            return None

        if self.policy == 'round-robin':
            chosen = order[0]
        else:
            starving = [p for p in order if self.max_wait and self.waits[p] >= self.max_wait]
            if starving:
                chosen = starving[0]
            else:
                longest = max(occupancies[p] for p in order)
                chosen = next(p for p in order if occupancies[p] == longest)

        for port in order:
            self.waits[port] = 0 if port == chosen else self.waits[port] + 1
        self.last_served = chosen
        self.served[chosen] += 1
        return chosen


def arbitrate(arbiter: InputArbiter, ports):
    """
    Select a port and dequeue its head frame

    Returns:
        tuple: (port index, RawFrame), or None when all queues are empty
    """
    chosen = arbiter.select([port.occupancy for port in ports])
    if chosen is None:
        return None
    frame = ports[chosen].pop_input()
    return (chosen, frame) if frame is not None else None
