"""Deterministic discrete-event core: microsecond clock, FIFO tie-break, labeled RNG streams."""

from __future__ import annotations

import hashlib
import heapq
import random

US_PER_S = 1_000_000


def to_us(seconds: float) -> int:
    return int(round(seconds * US_PER_S))


def to_s(us: int) -> float:
    return us / US_PER_S


class SchedulingInPastError(RuntimeError):
    """Raised when an event is scheduled before the current clock (programming error)."""


def seeded_stream(seed: int, label: str) -> random.Random:
    """Independent deterministic stream for (seed, label).

    The stream seed is derived through SHA-256 so it does not depend on
    PYTHONHASHSEED or platform hashing.
    """
    digest = hashlib.sha256(f"{seed}:{label}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


class EventLoop:
    """Event queue ordered by (fire time, insertion sequence).

    Time is kept as integer microseconds internally; seconds appear only at
    the API surface.  Equal-time events dequeue in insertion order.
    """

    def __init__(self) -> None:
        self.now_us = 0
        self.processed = 0
        self._seq = 0
        self._heap: list[tuple[int, int, object, tuple]] = []

    @property
    def now_s(self) -> float:
        return to_s(self.now_us)

    def schedule_at_us(self, fire_us: int, fn, *args) -> None:
        if fire_us < self.now_us:
            raise SchedulingInPastError(
                f"event at {to_s(fire_us)} s scheduled when clock is {self.now_s} s"
            )
        heapq.heappush(self._heap, (fire_us, self._seq, fn, args))
        self._seq += 1

    def schedule_in(self, delay_s: float, fn, *args) -> None:
        self.schedule_at_us(self.now_us + to_us(delay_s), fn, *args)

    def run_until(self, t_end_s: float) -> int:
        """Process every event with fire time <= t_end, leave the clock at t_end.

        Returns the number of events processed by this call.
        """
        end_us = to_us(t_end_s)
        before = self.processed
        heap = self._heap
        while heap and heap[0][0] <= end_us:
            fire_us, _seq, fn, args = heapq.heappop(heap)
            self.now_us = fire_us
            self.processed += 1
            fn(*args)
        self.now_us = end_us
        return self.processed - before

    def pending(self) -> int:
        return len(self._heap)
