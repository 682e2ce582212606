"""Deterministic discrete-event scheduler.

The clock is kept as integer nanoseconds so that queue ordering never depends
on floating-point rounding; the public API speaks seconds.  Events fire in
lexicographic ``(fire_time, sequence)`` order, so simultaneous events run in
the order they were scheduled.
"""

from __future__ import annotations

import heapq
import itertools
import random
import time
from dataclasses import dataclass
from typing import Any, Callable, Hashable

NS_PER_SECOND = 1_000_000_000

PENDING = 0
FIRED = 1
CANCELLED = 2


class SchedulingInPast(ValueError):
    pass


class ReentrantRun(RuntimeError):
    pass


def to_ns(seconds: float) -> int:
    """Convert seconds to the engine's integer nanosecond clock."""
    return round(seconds * NS_PER_SECOND)


def to_seconds(ns: int) -> float:
    return ns / NS_PER_SECOND


class ScheduledEvent:
    """A queued callback.  The object doubles as the handle returned to callers."""

    __slots__ = ("fire_time", "sequence", "target", "payload", "callback", "args", "state")

    def __init__(
        self,
        fire_time: int,
        sequence: int,
        callback: Callable[..., Any],
        args: tuple,
        target: Hashable | None,
        payload: Any,
    ) -> None:
        self.fire_time = fire_time
        self.sequence = sequence
        self.callback = callback
        self.args = args
        self.target = target
        self.payload = payload
        self.state = PENDING

    @property
    def pending(self) -> bool:
        return self.state == PENDING

    @property
    def key(self) -> tuple[int, int]:
        return (self.fire_time, self.sequence)

    def __repr__(self) -> str:
        return (
            f"ScheduledEvent(t={to_seconds(self.fire_time)!r}, seq={self.sequence}, "
            f"target={self.target!r}, payload={self.payload!r})"
        )


EventHandle = ScheduledEvent


@dataclass(frozen=True)
class RunStats:
    events_processed: int
    final_time: float
    wall_clock: float


class Engine:
    """Single-threaded event loop owning the simulation clock and RNG.

    ``mode="fast"`` runs events back to back.  ``mode="real-time"`` sleeps so
    that simulated time advances at ``time_scale`` simulated seconds per wall
    second.

    When ``trace`` is true every processed event is appended to
    :attr:`trace` as ``(fire_time_ns, sequence, target, payload)``.
    """

    def __init__(
        self,
        seed: int = 0,
        mode: str = "fast",
        time_scale: float = 1.0,
        trace: bool = False,
    ) -> None:
        if mode not in ("fast", "real-time"):
            raise ValueError(f"unknown engine mode {mode!r}")
        if time_scale <= 0:
            raise ValueError("time_scale must be positive")
        self.seed = seed
        self.rng = random.Random(seed)
        self.mode = mode
        self.time_scale = time_scale
        self.trace: list[tuple[int, int, Any, Any]] | None = [] if trace else None
        self._queue: list[tuple[int, int, ScheduledEvent]] = []
        self._counter = itertools.count()
        self._now = 0
        self._running = False

    # -- clock ---------------------------------------------------------------

    def now(self) -> float:
        return self._now / NS_PER_SECOND

    @property
    def now_ns(self) -> int:
        return self._now

    @property
    def running(self) -> bool:
        return self._running

    def pending_count(self) -> int:
        return sum(1 for _, _, ev in self._queue if ev.state == PENDING)

    # -- scheduling ----------------------------------------------------------

    def schedule_ns(
        self,
        fire_time: int,
        callback: Callable[..., Any],
        *args: Any,
        target: Hashable | None = None,
        payload: Any = None,
    ) -> EventHandle:
        if fire_time < self._now:
            raise SchedulingInPast(
                f"cannot schedule at t={to_seconds(fire_time)}s, clock is at {self.now()}s"
            )
        seq = next(self._counter)
        event = ScheduledEvent(fire_time, seq, callback, args, target, payload)
        heapq.heappush(self._queue, (fire_time, seq, event))
        return event

    def schedule(
        self,
        at: float,
        callback: Callable[..., Any],
        *args: Any,
        target: Hashable | None = None,
        payload: Any = None,
    ) -> EventHandle:
        """Queue ``callback(*args)`` to run at absolute time ``at`` seconds."""
        return self.schedule_ns(to_ns(at), callback, *args, target=target, payload=payload)

    def schedule_in(
        self,
        delay: float,
        callback: Callable[..., Any],
        *args: Any,
        target: Hashable | None = None,
        payload: Any = None,
    ) -> EventHandle:
        if delay < 0:
            raise SchedulingInPast(f"negative delay {delay}")
        return self.schedule_ns(
            self._now + to_ns(delay), callback, *args, target=target, payload=payload
        )

    def cancel(self, handle: EventHandle) -> bool:
        """Cancel a pending event.  Returns False for fired or already-cancelled handles."""
        if handle.state != PENDING:
            return False
        handle.state = CANCELLED
        return True

    # -- main loop -----------------------------------------------------------

    def run_until(self, limit: float) -> RunStats:
        """Process every event with ``fire_time <= limit``; the clock ends at ``limit``."""
        if self._running:
            raise ReentrantRun("run_until called from inside an event callback")
        limit_ns = to_ns(limit)
        if limit_ns < self._now:
            raise SchedulingInPast(f"limit {limit}s is before the current time {self.now()}s")

        queue = self._queue
        trace = self.trace
        pop = heapq.heappop
        paced = self.mode == "real-time"
        wall_start = time.perf_counter()
        sim_start = self._now
        processed = 0

        self._running = True
        try:
            while queue and queue[0][0] <= limit_ns:
                fire_time, seq, event = pop(queue)
                if event.state != PENDING:
                    continue
                if paced:
                    self._pace(fire_time, sim_start, wall_start)
                self._now = fire_time
                event.state = FIRED
                if trace is not None:
                    trace.append((fire_time, seq, event.target, event.payload))
                event.callback(*event.args)
                processed += 1
            if paced:
                self._pace(limit_ns, sim_start, wall_start)
            self._now = limit_ns
        finally:
            self._running = False

        return RunStats(processed, self.now(), time.perf_counter() - wall_start)

    def _pace(self, fire_time: int, sim_start: int, wall_start: float) -> None:
        due = wall_start + (fire_time - sim_start) / NS_PER_SECOND / self.time_scale
        delay = due - time.perf_counter()
        if delay > 0:
            time.sleep(delay)
