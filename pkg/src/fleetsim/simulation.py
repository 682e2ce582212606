"""The simulated environment and the encapsulator that binds protocols to it."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping

from .engine import Engine, EventHandle, RunStats
from .medium import Medium, MediumConfig, Transmission
from .mobility import DEFAULT_SPEED, MobilityController, position_at
from .protocol import (
    Broadcast,
    Command,
    DoubleEncapsulation,
    GeoPosition,
    GotoCoords,
    GotoGeoCoords,
    NodeId,
    Position,
    Protocol,
    Provider,
    ProviderContextError,
    Send,
    SetSpeed,
    Telemetry,
    TimerTag,
)

CREATED, ACTIVE, FINISHED = "created", "active", "finished"


@dataclass
class NodeRecord:
    id: NodeId
    role: str
    launch_time: float = 0.0
    color: str = "#ffffff"
    tracked: dict[str, float | int | str] = field(default_factory=dict)


class SimulationProvider(Provider):
    def __init__(self, node: EncapsulatedNode) -> None:
        self._node = node

    def _check(self) -> Simulation:
        node = self._node
        if not node.in_callback:
            raise ProviderContextError(
                f"node {node.record.id}: provider used outside a protocol callback"
            )
        return node.simulation

    def send_command(self, command: Command) -> None:
        sim = self._check()
        nid = self._node.record.id
        if isinstance(command, (GotoCoords, GotoGeoCoords, SetSpeed)):
            sim.mobility.apply(nid, command)
        elif isinstance(command, Broadcast):
            sim.transmit(Transmission(nid, bytes(command.payload), None, sim.engine.now()))
        elif isinstance(command, Send):
            sim.transmit(Transmission(nid, bytes(command.payload), command.target, sim.engine.now()))
        else:
            raise TypeError(f"unknown command {command!r}")

    def schedule_timer(self, tag: TimerTag, fire_at: float) -> EventHandle:
        sim = self._check()
        node = self._node
        return sim.engine.schedule(
            fire_at, node.fire_timer, tag, target=node.record.id, payload=("timer", tag)
        )

    def cancel_timer(self, handle: EventHandle) -> bool:
        return self._check().engine.cancel(handle)

    def current_time(self) -> float:
        return self._check().engine.now()

    def own_id(self) -> NodeId:
        self._check()
        return self._node.record.id

    def record_tracked_variable(self, name: str, value: float | int | str) -> None:
        self._check()
        self._node.record.tracked[name] = value

    def random(self) -> random.Random:
        return self._check().engine.rng


class EncapsulatedNode:
    """Routes engine events to one protocol and enforces callback ordering.

    ``on_initialize`` runs first, ``on_finish`` last, and nothing is delivered
    before initialization or after finalization.
    """

    def __init__(self, protocol: Protocol, record: NodeRecord, simulation: Simulation) -> None:
        if getattr(protocol, "_encapsulated", False):
            raise DoubleEncapsulation(f"{protocol!r} is already bound to an environment")
        self.protocol = protocol
        self.record = record
        self.simulation = simulation
        self.state = CREATED
        self.in_callback = False
        protocol.provider = SimulationProvider(self)
        protocol._encapsulated = True

    def _call(self, fn: Callable, *args) -> None:
        self.in_callback = True
        try:
            fn(*args)
        finally:
            self.in_callback = False

    def initialize(self) -> None:
        if self.state != CREATED:
            return
        self.state = ACTIVE
        self._call(self.protocol.on_initialize)

    def deliver(self, payload: bytes) -> bool:
        if self.state != ACTIVE:
            return False
        self._call(self.protocol.on_message_received, payload)
        return True

    def fire_timer(self, tag: TimerTag) -> None:
        if self.state == ACTIVE:
            self._call(self.protocol.on_timer_fired, tag)

    def telemetry(self, telemetry: Telemetry) -> None:
        if self.state == ACTIVE:
            self._call(self.protocol.on_telemetry, telemetry)

    def finish(self) -> None:
        if self.state != ACTIVE:
            self.state = FINISHED
            return
        self._call(self.protocol.on_finish)
        self.state = FINISHED


def encapsulate(protocol: Protocol, record: NodeRecord, simulation: Simulation) -> EncapsulatedNode:
    return EncapsulatedNode(protocol, record, simulation)


class _LivePositions(Mapping):
    """Positions evaluated lazily at the current engine time."""

    def __init__(self, sim: Simulation) -> None:
        self._states = sim.mobility.states
        self._now = sim.engine.now()

    def __getitem__(self, nid: NodeId) -> Position:
        return position_at(self._states[nid], self._now)

    def __iter__(self) -> Iterator[NodeId]:
        return iter(self._states)

    def __len__(self) -> int:
        return len(self._states)


class Simulation:
    """Nodes, their protocols, the medium and mobility on one engine.

    Observers in :attr:`delivery_observers` see every message handed to an
    active node, as ``(receiver, payload)``, just before the protocol does.
    """

    def __init__(
        self,
        engine: Engine | None = None,
        *,
        seed: int = 0,
        medium: MediumConfig | None = None,
        telemetry_interval: float = 1.0,
        default_speed: float = DEFAULT_SPEED,
        geo_reference: GeoPosition | None = None,
        mode: str = "fast",
    ) -> None:
        self.engine = engine if engine is not None else Engine(seed=seed, mode=mode)
        self.medium = Medium(self.engine, medium or MediumConfig(), self._deliver)
        self.mobility = MobilityController(self.engine, default_speed, geo_reference)
        self.telemetry_interval = telemetry_interval
        self.nodes: dict[NodeId, EncapsulatedNode] = {}
        self.delivery_observers: list[Callable[[NodeId, bytes], None]] = []
        self._finished = False

    def add_node(
        self,
        protocol: Protocol,
        position: Position | tuple[float, float, float] = (0.0, 0.0, 0.0),
        *,
        role: str = "node",
        launch_at: float = 0.0,
        color: str = "#ffffff",
        speed: float | None = None,
    ) -> NodeId:
        nid = len(self.nodes)
        record = NodeRecord(nid, role, launch_at, color)
        self.mobility.register(nid, Position(*position), speed)
        self.medium.register(nid)
        node = encapsulate(protocol, record, self)
        self.nodes[nid] = node
        self.engine.schedule(
            max(launch_at, self.engine.now()), self._launch, node, target=nid, payload="launch"
        )
        return nid

    def _launch(self, node: EncapsulatedNode) -> None:
        if node.state != CREATED:
            return
        node.initialize()
        self.mobility.start_telemetry(node.record.id, self.telemetry_interval, node.telemetry)

    def transmit(self, t: Transmission):
        return self.medium.transmit(t, _LivePositions(self))

    def _deliver(self, receiver: NodeId, payload: bytes) -> None:
        node = self.nodes[receiver]
        if node.state != ACTIVE:
            return
        for observe in self.delivery_observers:
            observe(receiver, payload)
        node.deliver(payload)

    def position(self, nid: NodeId) -> Position:
        return self.mobility.position(nid)

    def run(self, until: float, finish: bool = True) -> RunStats:
        stats = self.engine.run_until(until)
        if finish:
            self.finish()
        return stats

    def finish(self) -> None:
        if self._finished:
            return
        self._finished = True
        for nid, node in self.nodes.items():
            self.mobility.stop_telemetry(nid)
            node.finish()
