"""Deterministic discrete-event engine.

Simulated time is kept as an integer count of microseconds so that slot
arithmetic is exact and event ordering never depends on float rounding.
"""

from __future__ import annotations

import hashlib
import heapq
import itertools
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

US_PER_S = 1_000_000


def to_us(seconds: float) -> int:
    """Convert seconds to integer microseconds (round half to even)."""
    return int(round(seconds * US_PER_S))


def to_s(us: int) -> float:
    return us / US_PER_S


class SchedulingError(ValueError):
    """Raised when an event is scheduled before the current clock."""


@dataclass(frozen=True)
class EventHandle:
    id: int


@dataclass(order=True)
class Event:
    """A queued callback.

    Ordering is ``(fire_time, sequence)``; ``sequence`` is assigned by the
    simulator on scheduling when left at ``-1``.
    """

    fire_time: int
    sequence: int = -1
    target: Any = field(default=None, compare=False)
    kind: str = field(default="timer", compare=False)
    callback: Callable[..., Any] | None = field(default=None, compare=False)
    args: tuple = field(default=(), compare=False)


class Simulator:
    """Single-threaded event loop with cancellable timers."""

    def __init__(self) -> None:
        self.now: int = 0
        self._queue: list[tuple[int, int, Event]] = []
        self._seq = itertools.count()
        self._pending: set[int] = set()
        self.fired = 0

    def schedule(self, event: Event) -> EventHandle:
        if event.fire_time < self.now:
            raise SchedulingError(
                f"event at {event.fire_time} us is before clock {self.now} us"
            )
        if event.sequence < 0:
            event.sequence = next(self._seq)
        heapq.heappush(self._queue, (event.fire_time, event.sequence, event))
        self._pending.add(event.sequence)
        return EventHandle(event.sequence)

    def call_at(self, t_us: int, callback: Callable[..., Any], *args: Any,
                kind: str = "timer", target: Any = None) -> EventHandle:
        return self.schedule(Event(t_us, -1, target, kind, callback, args))

    def call_later(self, delay_us: int, callback: Callable[..., Any], *args: Any,
                   kind: str = "timer", target: Any = None) -> EventHandle:
        return self.call_at(self.now + delay_us, callback, *args, kind=kind, target=target)

    def cancel(self, handle: EventHandle) -> bool:
        if handle.id in self._pending:
            self._pending.discard(handle.id)
            return True
        return False

    def is_pending(self, handle: EventHandle) -> bool:
        return handle.id in self._pending

    def run(self, until: int) -> int:
        """Fire every event with ``fire_time <= until``; return how many fired."""
        if until < self.now:
            raise SchedulingError(f"cannot run backwards to {until} us from {self.now} us")
        count = 0
        queue = self._queue
        pending = self._pending
        while queue and queue[0][0] <= until:
            t, seq, event = heapq.heappop(queue)
            if seq not in pending:
                continue
            pending.discard(seq)
            self.now = t
            if event.callback is not None:
                event.callback(*event.args)
            count += 1
        self.now = until
        self.fired += count
        return count

    def __len__(self) -> int:
        return len(self._pending)


def _label_key(label: str) -> int:
    return int.from_bytes(hashlib.blake2b(label.encode(), digest_size=8).digest(), "little")


class RngStream:
    """A labeled random stream derived from a root seed.

    Streams with the same ``(root_seed, label)`` replay the same values;
    distinct labels are independent, so adding a consumer never perturbs
    another.
    """

    def __init__(self, root_seed: int, label: str) -> None:
        self.root_seed = int(root_seed)
        self.label = label
        seq = np.random.SeedSequence(entropy=self.root_seed & (2**64 - 1),
                                     spawn_key=(_label_key(label),))
        self.gen = np.random.Generator(np.random.PCG64(seq))

    def random(self, size=None):
        return self.gen.random(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.gen.uniform(low, high, size)

    def exponential(self, scale=1.0, size=None):
        return self.gen.exponential(scale, size)

    def integers(self, low, high=None, size=None, endpoint=False):
        return self.gen.integers(low, high, size, endpoint=endpoint)

    def poisson(self, lam, size=None):
        return self.gen.poisson(lam, size)

    def __repr__(self) -> str:
        return f"RngStream(root_seed={self.root_seed}, label={self.label!r})"


def derive_rng(root_seed: int, label: str) -> RngStream:
    return RngStream(root_seed, label)
