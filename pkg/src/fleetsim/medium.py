"""Wireless medium: range check, delay, random loss and an optional collision model.

Range is evaluated once, against node positions at the instant of sending.
With the collision model enabled every transmission occupies the receiver's
channel for ``transmission_duration`` seconds.  A reception survives only if
its window overlaps no other reception at that receiver and none of the
receiver's own transmissions (radios are half-duplex); survivors are handed
to the receiver when their window closes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .engine import Engine, EventHandle, to_ns
from .protocol import NodeId, Position


class UnknownTarget(LookupError):
    pass


@dataclass
class MediumConfig:
    range: float = 50.0
    delay: float = 0.0
    drop_probability: float = 0.0
    collision_model: bool = False
    transmission_duration: float = 0.010

    def problems(self) -> list[str]:
        """Field-level validation messages; empty when the config is valid."""
        out = []
        if not (self.range >= 0 and math.isfinite(self.range)):
            out.append(f"medium.range: must be a finite value >= 0, got {self.range}")
        if not (self.delay >= 0 and math.isfinite(self.delay)):
            out.append(f"medium.delay: must be a finite value >= 0, got {self.delay}")
        if not 0.0 <= self.drop_probability <= 1.0:
            out.append(
                f"medium.drop_probability: must lie in [0, 1], got {self.drop_probability}"
            )
        if self.collision_model and not self.transmission_duration > 0:
            out.append(
                "medium.transmission_duration: must be > 0 when the collision model is on, "
                f"got {self.transmission_duration}"
            )
        return out


@dataclass(frozen=True)
class Transmission:
    sender: NodeId
    payload: bytes
    target: NodeId | None  # None means broadcast
    sent_at: float

    @property
    def is_broadcast(self) -> bool:
        return self.target is None


@dataclass
class Delivery:
    receiver: NodeId
    payload: bytes
    arrival: int  # ns
    handle: EventHandle | None = field(default=None, repr=False)


def in_range(a: Sequence[float], b: Sequence[float], range_: float) -> bool:
    """True iff the Euclidean distance between ``a`` and ``b`` is at most ``range_``."""
    dx, dy, dz = a[0] - b[0], a[1] - b[1], a[2] - b[2]
    return dx * dx + dy * dy + dz * dz <= range_ * range_


def resolve_collisions(arrivals: Sequence[float], duration: float) -> list[int]:
    """Indices of arrivals whose ``[t, t + duration)`` window overlaps no other window."""
    survivors = []
    for i, a in enumerate(arrivals):
        if not any(j != i and a < b + duration and b < a + duration for j, b in enumerate(arrivals)):
            survivors.append(i)
    return survivors


class Medium:
    """Turns transmissions into scheduled deliveries on the engine.

    ``deliver(receiver, payload)`` is invoked for every message that survives.
    """

    def __init__(
        self,
        engine: Engine,
        config: MediumConfig,
        deliver: Callable[[NodeId, bytes], None],
    ) -> None:
        problems = config.problems()
        if problems:
            raise ValueError("; ".join(problems))
        self.engine = engine
        self.config = config
        self.deliver = deliver
        self.nodes: list[NodeId] = []
        self._delay_ns = to_ns(config.delay)
        self._duration_ns = to_ns(config.transmission_duration)
        # receiver -> list of [start_ns, end_ns, window_id] occupying its channel
        self._channel: dict[NodeId, list[tuple[int, int, int]]] = {}
        self._window_ids = itertools.count()
        self.transmissions = 0
        self.collisions = 0

    def register(self, node_id: NodeId) -> None:
        if node_id in self._channel:
            raise ValueError(f"node {node_id} already registered with the medium")
        self.nodes.append(node_id)
        self._channel[node_id] = []

    def transmit(self, t: Transmission, positions: Mapping[NodeId, Position]) -> list[Delivery]:
        if t.target is not None and t.target not in self._channel:
            raise UnknownTarget(f"no node with id {t.target}")
        engine, cfg = self.engine, self.config
        self.transmissions += 1
        origin = positions[t.sender]
        if t.target is None:
            recipients = [n for n in self.nodes if n != t.sender]
        else:
            recipients = [t.target]

        arrival = to_ns(t.sent_at) + self._delay_ns
        if cfg.collision_model:
            sent = to_ns(t.sent_at)
            self._occupy(t.sender, sent, sent + self._duration_ns)

        p = cfg.drop_probability
        rng = engine.rng
        out = []
        for r in recipients:
            if not in_range(origin, positions[r], cfg.range):
                continue
            if p > 0 and rng.random() < p:
                continue
            d = Delivery(r, t.payload, arrival)
            if cfg.collision_model:
                end = arrival + self._duration_ns
                wid = self._occupy(r, arrival, end)
                d.handle = engine.schedule_ns(
                    end, self._finish_reception, d, wid, target=r, payload="reception"
                )
            else:
                d.handle = engine.schedule_ns(
                    arrival, self.deliver, r, t.payload, target=r, payload="delivery"
                )
            out.append(d)
        return out

    def _occupy(self, node: NodeId, start: int, end: int) -> int:
        wid = next(self._window_ids)
        self._channel[node].append((start, end, wid))
        return wid

    def _finish_reception(self, d: Delivery, wid: int) -> None:
        start, end = d.arrival, d.arrival + self._duration_ns
        windows = self._channel[d.receiver]
        horizon = start - self._duration_ns
        windows[:] = [w for w in windows if w[1] > horizon]
        if any(w[2] != wid and w[0] < end and start < w[1] for w in windows):
            self.collisions += 1
            return
        self.deliver(d.receiver, d.payload)
