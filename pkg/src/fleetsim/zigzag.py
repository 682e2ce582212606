"""ZigZag: heartbeat-driven data ferrying along a shared waypoint mission.

UAVs patrol the same mission (ground station first, then every sensor) and
broadcast heartbeats.  Sensors answer a UAV heartbeat with one unit of data.
When a UAV hears another UAV or the ground station it starts a three-step
handshake (heartbeat, pair request, pair confirm).  Completing it moves all
the pair's data onto the member nearer the ground station along the
mission, which then heads home while the other heads out.  The ground
station always takes the data.  After an interaction a UAV ignores other
UAVs and the ground station for ``interaction_timeout`` seconds.
"""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass
from typing import Sequence

from .engine import EventHandle
from .plugins import DEFAULT_ARRIVAL_TOLERANCE, Direction, LoopPolicy, MissionMobility
from .protocol import Broadcast, NodeId, Position, Protocol, Send, SetSpeed, Telemetry

HEARTBEAT_TIMER = "heartbeat"
PAIR_DEADLINE_TIMER = "pair_deadline"


class MessageKind(enum.IntEnum):
    HEARTBEAT = 0
    SENSOR_DATA = 1
    PAIR_REQUEST = 2
    PAIR_CONFIRM = 3


class Role(enum.IntEnum):
    UAV = 0
    SENSOR = 1
    GROUND_STATION = 2


class OffsetMode(str, enum.Enum):
    RANDOM = "random"
    ZERO = "zero"


# kind u8, sender u32, role u8, data_count u64, mission_progress f64
_WIRE = struct.Struct("<BIBQd")


@dataclass(frozen=True)
class ZigZagMessage:
    kind: MessageKind
    sender: NodeId
    sender_role: Role
    data_count: int = 0
    mission_progress: float = 0.0

    def encode(self) -> bytes:
        return _WIRE.pack(
            self.kind, self.sender, self.sender_role, self.data_count, self.mission_progress
        )

    @classmethod
    def decode(cls, payload: bytes) -> ZigZagMessage:
        kind, sender, role, count, progress = _WIRE.unpack(payload)
        return cls(MessageKind(kind), sender, Role(role), count, progress)


@dataclass
class ZigZagParams:
    heartbeat_interval: float = 1.0
    interaction_timeout: float = 5.0
    offset_mode: OffsetMode = OffsetMode.RANDOM
    pair_confirm_deadline: float = 1.0

    def __post_init__(self) -> None:
        self.offset_mode = OffsetMode(self.offset_mode)

    def problems(self) -> list[str]:
        out = []
        if not self.heartbeat_interval > 0:
            out.append(f"zigzag.heartbeat_interval: must be > 0, got {self.heartbeat_interval}")
        # zero is allowed so the interaction-loop failure can be reproduced
        if not self.interaction_timeout >= 0:
            out.append(f"zigzag.interaction_timeout: must be >= 0, got {self.interaction_timeout}")
        if not self.pair_confirm_deadline > 0:
            out.append(
                f"zigzag.pair_confirm_deadline: must be > 0, got {self.pair_confirm_deadline}"
            )
        return out


@dataclass(frozen=True)
class PairOutcome:
    data_count: int
    direction: Direction
    ignore_until: float

    @property
    def ground_station_bound(self) -> bool:
        return self.direction is Direction.REVERSE


def _homeward_key(node_id: NodeId, progress: float, is_ground_station: bool) -> tuple[float, int]:
    return (-math.inf if is_ground_station else abs(progress), node_id)


def resolve_pair_outcome(
    own_id: NodeId,
    own_count: int,
    own_progress: float,
    peer_id: NodeId,
    peer_count: int,
    peer_progress: float,
    now: float,
    interaction_timeout: float,
    offered: int | None = None,
    peer_is_ground_station: bool = False,
) -> PairOutcome:
    """Outcome of a completed handshake as seen by a UAV.

    The member nearer the ground station along the mission (smaller progress
    magnitude, then smaller id; the ground station always wins) heads home
    with ``own_count + peer_count``.  The other heads out and gives up the
    ``offered`` units it advertised to the peer, which is its whole count
    unless data arrived after it made the offer.
    """
    if offered is None:
        offered = own_count
    mine = _homeward_key(own_id, own_progress, False)
    theirs = _homeward_key(peer_id, peer_progress, peer_is_ground_station)
    ignore_until = now + interaction_timeout
    if mine < theirs:
        return PairOutcome(own_count + peer_count, Direction.REVERSE, ignore_until)
    return PairOutcome(own_count - offered, Direction.FORWARD, ignore_until)


def _heartbeat_offset(provider, params: ZigZagParams) -> float:
    if params.offset_mode is OffsetMode.ZERO:
        return 0.0
    return provider.random().random() * params.heartbeat_interval


class ZigZagUAV(Protocol):
    def __init__(
        self,
        waypoints: Sequence[Sequence[float]],
        params: ZigZagParams | None = None,
        speed: float | None = None,
        arrival_tolerance: float = DEFAULT_ARRIVAL_TOLERANCE,
    ) -> None:
        self.waypoints = [Position(*w) for w in waypoints]
        self.params = params or ZigZagParams()
        self.speed = speed
        self.arrival_tolerance = arrival_tolerance
        self.data_count = 0
        self.ignore_until = 0.0
        self.awaiting: NodeId | None = None
        self._offered = 0
        self._deadline: EventHandle | None = None
        self.pairings: list[tuple[float, NodeId]] = []
        self.heartbeat_offset = 0.0
        self.mission: MissionMobility | None = None

    # -- helpers ---------------------------------------------------------------

    def _message(self, kind: MessageKind, count: int = 0) -> bytes:
        progress = self.mission.progress
        if self.mission.direction is Direction.REVERSE:
            progress = -progress if progress != 0 else -0.0
        return ZigZagMessage(kind, self.provider.own_id(), Role.UAV, count, progress).encode()

    def _track(self) -> None:
        self.provider.record_tracked_variable("data_count", self.data_count)

    # -- protocol events -------------------------------------------------------

    def on_initialize(self) -> None:
        provider = self.provider
        self.mission = MissionMobility(provider, LoopPolicy.REVERSE_AT_ENDS, self.arrival_tolerance)
        if self.speed is not None:
            provider.send_command(SetSpeed(self.speed))
        self.mission.start(self.waypoints)
        self.heartbeat_offset = _heartbeat_offset(provider, self.params)
        provider.schedule_timer(HEARTBEAT_TIMER, provider.current_time() + self.heartbeat_offset)
        self._track()

    def on_timer_fired(self, tag) -> None:
        provider = self.provider
        if tag == HEARTBEAT_TIMER:
            provider.send_command(Broadcast(self._message(MessageKind.HEARTBEAT, self.data_count)))
            provider.schedule_timer(
                HEARTBEAT_TIMER, provider.current_time() + self.params.heartbeat_interval
            )
        elif isinstance(tag, tuple) and tag[0] == PAIR_DEADLINE_TIMER:
            if self.awaiting == tag[1]:
                self.awaiting = None
                self._deadline = None

    def on_telemetry(self, telemetry: Telemetry) -> None:
        self.mission.on_telemetry(telemetry)

    def on_message_received(self, payload: bytes) -> None:
        msg = ZigZagMessage.decode(payload)
        if msg.kind is MessageKind.SENSOR_DATA:
            self.data_count += msg.data_count
            self._track()
            return
        if msg.sender_role is Role.SENSOR:
            return
        if self.provider.current_time() < self.ignore_until:
            return
        if msg.kind is MessageKind.HEARTBEAT:
            self._on_heartbeat(msg)
        elif msg.kind is MessageKind.PAIR_REQUEST:
            self._on_request(msg)
        elif msg.kind is MessageKind.PAIR_CONFIRM:
            self._on_confirm(msg)

    def on_finish(self) -> None:
        self._track()

    # -- handshake -------------------------------------------------------------

    def _on_heartbeat(self, msg: ZigZagMessage) -> None:
        if self.awaiting is not None:
            return
        provider = self.provider
        self._offered = self.data_count
        provider.send_command(Send(msg.sender, self._message(MessageKind.PAIR_REQUEST, self._offered)))
        self.awaiting = msg.sender
        self._deadline = provider.schedule_timer(
            (PAIR_DEADLINE_TIMER, msg.sender),
            provider.current_time() + self.params.pair_confirm_deadline,
        )

    def _on_request(self, msg: ZigZagMessage) -> None:
        if self.awaiting is not None:
            # Crossed requests between the same two nodes: the lower id confirms.
            if self.awaiting != msg.sender or self.provider.own_id() > msg.sender:
                return
            self._clear_handshake()
        offered = self.data_count
        self.provider.send_command(Send(msg.sender, self._message(MessageKind.PAIR_CONFIRM, offered)))
        self._commit(msg, offered)

    def _on_confirm(self, msg: ZigZagMessage) -> None:
        if self.awaiting != msg.sender:
            return
        offered = self._offered
        self._clear_handshake()
        self._commit(msg, offered)

    def _clear_handshake(self) -> None:
        if self._deadline is not None:
            self.provider.cancel_timer(self._deadline)
        self._deadline = None
        self.awaiting = None

    def _commit(self, peer: ZigZagMessage, offered: int) -> None:
        provider = self.provider
        now = provider.current_time()
        outcome = resolve_pair_outcome(
            provider.own_id(),
            self.data_count,
            self.mission.progress,
            peer.sender,
            peer.data_count,
            peer.mission_progress,
            now,
            self.params.interaction_timeout,
            offered=offered,
            peer_is_ground_station=peer.sender_role is Role.GROUND_STATION,
        )
        self.data_count = outcome.data_count
        self.ignore_until = outcome.ignore_until
        self.mission.set_direction(outcome.direction)
        self.pairings.append((now, peer.sender))
        self._track()


class ZigZagSensor(Protocol):
    """Answers every UAV heartbeat with one unit of data."""

    def __init__(self) -> None:
        self.responses = 0

    def on_initialize(self) -> None:
        self.provider.record_tracked_variable("responses", 0)

    def on_message_received(self, payload: bytes) -> None:
        msg = ZigZagMessage.decode(payload)
        if msg.kind is not MessageKind.HEARTBEAT or msg.sender_role is not Role.UAV:
            return
        reply = ZigZagMessage(MessageKind.SENSOR_DATA, self.provider.own_id(), Role.SENSOR, 1)
        self.provider.send_command(Send(msg.sender, reply.encode()))
        self.responses += 1
        self.provider.record_tracked_variable("responses", self.responses)

    def on_timer_fired(self, tag) -> None:
        pass

    def on_telemetry(self, telemetry: Telemetry) -> None:
        pass

    def on_finish(self) -> None:
        pass


class ZigZagGroundStation(Protocol):
    """Stationary sink.  Runs the same handshake and always keeps the data."""

    def __init__(self, params: ZigZagParams | None = None) -> None:
        self.params = params or ZigZagParams()
        self.collected = 0
        self.pending: dict[NodeId, EventHandle] = {}
        self.pairings: list[tuple[float, NodeId]] = []
        self.heartbeat_offset = 0.0

    def _message(self, kind: MessageKind) -> bytes:
        return ZigZagMessage(
            kind, self.provider.own_id(), Role.GROUND_STATION, 0, -math.inf
        ).encode()

    def on_initialize(self) -> None:
        provider = self.provider
        self.heartbeat_offset = _heartbeat_offset(provider, self.params)
        provider.schedule_timer(HEARTBEAT_TIMER, provider.current_time() + self.heartbeat_offset)
        provider.record_tracked_variable("collected", self.collected)

    def on_timer_fired(self, tag) -> None:
        provider = self.provider
        if tag == HEARTBEAT_TIMER:
            provider.send_command(Broadcast(self._message(MessageKind.HEARTBEAT)))
            provider.schedule_timer(
                HEARTBEAT_TIMER, provider.current_time() + self.params.heartbeat_interval
            )
        elif isinstance(tag, tuple) and tag[0] == PAIR_DEADLINE_TIMER:
            self.pending.pop(tag[1], None)

    def on_message_received(self, payload: bytes) -> None:
        msg = ZigZagMessage.decode(payload)
        if msg.sender_role is not Role.UAV:
            return
        provider = self.provider
        uav = msg.sender
        if msg.kind is MessageKind.HEARTBEAT:
            if uav in self.pending:
                return
            provider.send_command(Send(uav, self._message(MessageKind.PAIR_REQUEST)))
            self.pending[uav] = provider.schedule_timer(
                (PAIR_DEADLINE_TIMER, uav),
                provider.current_time() + self.params.pair_confirm_deadline,
            )
        elif msg.kind is MessageKind.PAIR_REQUEST:
            if uav in self.pending:
                if provider.own_id() > uav:
                    return
                provider.cancel_timer(self.pending.pop(uav))
            provider.send_command(Send(uav, self._message(MessageKind.PAIR_CONFIRM)))
            self._commit(msg)
        elif msg.kind is MessageKind.PAIR_CONFIRM:
            handle = self.pending.pop(uav, None)
            if handle is None:
                return
            provider.cancel_timer(handle)
            self._commit(msg)

    def _commit(self, msg: ZigZagMessage) -> None:
        self.collected += msg.data_count
        self.pairings.append((self.provider.current_time(), msg.sender))
        self.provider.record_tracked_variable("collected", self.collected)

    def on_telemetry(self, telemetry: Telemetry) -> None:
        pass

    def on_finish(self) -> None:
        self.provider.record_tracked_variable("collected", self.collected)
