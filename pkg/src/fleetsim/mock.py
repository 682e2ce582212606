"""A scripted stand-in environment for unit-testing protocols.

There is no geometry and no radio here.  Tests drive time explicitly, inject
messages and telemetry, and inspect the commands each protocol issued.
Communication commands queue in :attr:`MockEnvironment.outbox` until
:meth:`MockEnvironment.route` hands them to their recipients, optionally
through a ``drop`` filter.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import Callable, Sequence

from .engine import Engine, EventHandle
from .protocol import (
    Broadcast,
    Command,
    DoubleEncapsulation,
    NodeId,
    Position,
    Protocol,
    Provider,
    ProviderContextError,
    Send,
    Telemetry,
    TimerTag,
)


@dataclass(frozen=True)
class Sent:
    sender: NodeId
    command: Command
    time: float


class MockProvider(Provider):
    def __init__(self, env: MockEnvironment, node_id: NodeId) -> None:
        self._env = env
        self._id = node_id

    def _check(self) -> None:
        if self._env.active_callback != self._id:
            raise ProviderContextError(f"node {self._id}: provider used outside a callback")

    def send_command(self, command: Command) -> None:
        self._check()
        env = self._env
        record = Sent(self._id, command, env.now)
        env.log.append(record)
        if isinstance(command, (Send, Broadcast)):
            env.outbox.append(record)
        else:
            env.mobility[self._id].append(command)

    def schedule_timer(self, tag: TimerTag, fire_at: float) -> EventHandle:
        self._check()
        return self._env.clock.schedule(fire_at, self._env._fire, self._id, tag)

    def cancel_timer(self, handle: EventHandle) -> bool:
        self._check()
        return self._env.clock.cancel(handle)

    def current_time(self) -> float:
        self._check()
        return self._env.now

    def own_id(self) -> NodeId:
        self._check()
        return self._id

    def record_tracked_variable(self, name: str, value: float | int | str) -> None:
        self._check()
        self._env.tracked.setdefault(self._id, {})[name] = value

    def random(self) -> random.Random:
        self._check()
        return self._env.rng


class MockEnvironment:
    """Hosts protocols on a manual clock.

    Timers fire when :meth:`advance` moves the clock past them.  Messages
    are routed in FIFO order by :meth:`route`; with ``auto_route`` they are
    routed after every top-level callback.
    """

    def __init__(self, seed: int = 0, auto_route: bool = False) -> None:
        self.clock = Engine(seed=seed)
        self.rng = random.Random(seed)
        self.auto_route = auto_route
        self.protocols: dict[NodeId, Protocol] = {}
        self.initialized: set[NodeId] = set()
        self.finished: set[NodeId] = set()
        self.outbox: deque[Sent] = deque()
        self.log: list[Sent] = []
        self.mobility: dict[NodeId, list[Command]] = {}
        self.tracked: dict[NodeId, dict[str, float | int | str]] = {}
        self.delivered: list[tuple[NodeId, NodeId, bytes]] = []
        self.drop: Callable[[NodeId, NodeId, bytes], bool] | None = None
        self.active_callback: NodeId | None = None
        self._routing = False

    @property
    def now(self) -> float:
        return self.clock.now()

    def add(self, protocol: Protocol, node_id: NodeId | None = None) -> NodeId:
        if getattr(protocol, "_encapsulated", False):
            raise DoubleEncapsulation(f"{protocol!r} is already bound to an environment")
        nid = len(self.protocols) if node_id is None else node_id
        if nid in self.protocols:
            raise ValueError(f"node id {nid} already in use")
        protocol.provider = MockProvider(self, nid)
        protocol._encapsulated = True
        self.protocols[nid] = protocol
        self.mobility[nid] = []
        return nid

    def _call(self, nid: NodeId, fn: Callable, *args) -> None:
        if nid not in self.initialized or nid in self.finished:
            return
        outer = self.active_callback
        self.active_callback = nid
        try:
            fn(*args)
        finally:
            self.active_callback = outer
        if self.auto_route and outer is None:
            self.route()

    def initialize(self, *node_ids: NodeId) -> None:
        for nid in node_ids or tuple(self.protocols):
            if nid in self.initialized:
                continue
            self.initialized.add(nid)
            self._call(nid, self.protocols[nid].on_initialize)

    def advance(self, to: float) -> None:
        """Move the clock to ``to``, firing every timer due on the way."""
        self.clock.run_until(to)

    def advance_by(self, dt: float) -> None:
        self.advance(self.now + dt)

    def _fire(self, nid: NodeId, tag: TimerTag) -> None:
        self._call(nid, self.protocols[nid].on_timer_fired, tag)

    def deliver(self, nid: NodeId, payload: bytes) -> None:
        self._call(nid, self.protocols[nid].on_message_received, payload)

    def telemetry(self, nid: NodeId, position: Sequence[float]) -> None:
        self._call(nid, self.protocols[nid].on_telemetry, Telemetry(Position(*position), self.now))

    def finish(self, *node_ids: NodeId) -> None:
        for nid in node_ids or tuple(self.protocols):
            if nid in self.initialized and nid not in self.finished:
                self._call(nid, self.protocols[nid].on_finish)
            self.finished.add(nid)

    def route(self, max_messages: int = 100_000) -> int:
        """Deliver queued messages until the outbox is empty; returns how many were handed over."""
        if self._routing:
            return 0
        self._routing = True
        count = 0
        try:
            while self.outbox:
                if count >= max_messages:
                    raise RuntimeError("routing did not quiesce")
                sent = self.outbox.popleft()
                cmd = sent.command
                if isinstance(cmd, Send):
                    receivers = [cmd.target]
                else:
                    receivers = [n for n in self.protocols if n != sent.sender]
                for r in receivers:
                    if self.drop is not None and self.drop(sent.sender, r, cmd.payload):
                        continue
                    self.delivered.append((sent.sender, r, cmd.payload))
                    self.deliver(r, cmd.payload)
                    count += 1
        finally:
            self._routing = False
        return count

    def sent_by(self, nid: NodeId) -> list[Command]:
        return [s.command for s in self.log if s.sender == nid]

    def clear(self) -> None:
        self.outbox.clear()
        self.log.clear()
        for cmds in self.mobility.values():
            cmds.clear()
