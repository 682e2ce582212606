"""Closed-form straight-line kinematics and per-node telemetry ticks.

Nodes turn instantly and fly at constant speed toward their current target.
Each command re-anchors the motion at the node's position at that instant,
so the trajectory is piecewise linear and can be evaluated at any time
without integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

from .engine import Engine, EventHandle
from .protocol import (
    GeoPosition,
    GotoCoords,
    GotoGeoCoords,
    InvalidSpeed,
    MobilityCommand,
    NodeId,
    Position,
    SetSpeed,
    Telemetry,
    geo_to_local,
)

DEFAULT_SPEED = 10.0


@dataclass(frozen=True)
class MotionState:
    anchor_position: Position
    anchor_time: float = 0.0
    target: Position | None = None
    speed: float = DEFAULT_SPEED

    def __post_init__(self) -> None:
        if not self.speed > 0:
            raise InvalidSpeed(f"speed must be positive, got {self.speed}")


def position_at(state: MotionState, t: float) -> Position:
    """Position at time ``t``, clamped at the target once it is reached."""
    if t < state.anchor_time:
        raise ValueError(f"t={t} precedes the motion anchor at {state.anchor_time}")
    a, target = state.anchor_position, state.target
    if target is None:
        return a
    dx, dy, dz = target[0] - a[0], target[1] - a[1], target[2] - a[2]
    length = math.sqrt(dx * dx + dy * dy + dz * dz)
    travelled = state.speed * (t - state.anchor_time)
    if travelled >= length:
        return target
    f = travelled / length
    return Position(a[0] + dx * f, a[1] + dy * f, a[2] + dz * f)


def arrival_time(state: MotionState) -> float | None:
    """When the node reaches its target, or None if it has no target."""
    if state.target is None:
        return None
    a, b = state.anchor_position, state.target
    length = math.sqrt((b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2 + (b[2] - a[2]) ** 2)
    return state.anchor_time + length / state.speed


def apply_command(
    state: MotionState,
    cmd: MobilityCommand,
    at: float,
    geo_reference: GeoPosition | None = None,
) -> MotionState:
    """Re-anchor ``state`` at time ``at`` and apply ``cmd``."""
    if at < state.anchor_time:
        raise ValueError(f"command at t={at} precedes the motion anchor at {state.anchor_time}")
    here = position_at(state, at)
    if isinstance(cmd, GotoCoords):
        return MotionState(here, at, Position(*cmd.position), state.speed)
    if isinstance(cmd, GotoGeoCoords):
        return MotionState(here, at, geo_to_local(cmd.position, geo_reference), state.speed)
    if isinstance(cmd, SetSpeed):
        if not cmd.speed > 0:
            raise InvalidSpeed(f"speed must be positive, got {cmd.speed}")
        return MotionState(here, at, state.target, cmd.speed)
    raise TypeError(f"not a mobility command: {cmd!r}")


class MobilityController:
    """Owns every node's :class:`MotionState` inside a running simulation."""

    def __init__(
        self,
        engine: Engine,
        default_speed: float = DEFAULT_SPEED,
        geo_reference: GeoPosition | None = None,
    ) -> None:
        self.engine = engine
        self.default_speed = default_speed
        self.geo_reference = geo_reference
        self.states: dict[NodeId, MotionState] = {}
        self._arrivals: dict[NodeId, EventHandle] = {}
        self._ticks: dict[NodeId, EventHandle] = {}

    def register(self, node_id: NodeId, position: Position, speed: float | None = None) -> None:
        if node_id in self.states:
            raise ValueError(f"node {node_id} already registered with mobility")
        self.states[node_id] = MotionState(
            Position(*position), self.engine.now(), None, speed or self.default_speed
        )

    def position(self, node_id: NodeId, t: float | None = None) -> Position:
        return position_at(self.states[node_id], self.engine.now() if t is None else t)

    def positions(self) -> dict[NodeId, Position]:
        now = self.engine.now()
        return {nid: position_at(s, now) for nid, s in self.states.items()}

    def apply(self, node_id: NodeId, cmd: MobilityCommand) -> MotionState:
        engine = self.engine
        state = apply_command(self.states[node_id], cmd, engine.now(), self.geo_reference)
        self.states[node_id] = state
        previous = self._arrivals.pop(node_id, None)
        if previous is not None:
            engine.cancel(previous)
        arrive = arrival_time(state)
        if arrive is not None:
            self._arrivals[node_id] = engine.schedule_ns(
                max(engine.now_ns, round(arrive * 1e9)),
                self._arrive,
                node_id,
                target=node_id,
                payload="arrival",
            )
        return state

    def _arrive(self, node_id: NodeId) -> None:
        self._arrivals.pop(node_id, None)
        state = self.states[node_id]
        if state.target is not None:
            self.states[node_id] = replace(
                state, anchor_position=state.target, anchor_time=self.engine.now(), target=None
            )

    def start_telemetry(
        self, node_id: NodeId, interval: float, deliver: Callable[[Telemetry], None]
    ) -> None:
        """Deliver telemetry to ``deliver`` every ``interval`` seconds, starting one interval from now."""
        if interval <= 0:
            raise ValueError("telemetry interval must be positive")
        self._ticks[node_id] = self.engine.schedule_in(
            interval, self.telemetry_tick, node_id, interval, deliver,
            target=node_id, payload="telemetry",
        )

    def telemetry_tick(
        self, node_id: NodeId, interval: float, deliver: Callable[[Telemetry], None]
    ) -> None:
        engine = self.engine
        self._ticks[node_id] = engine.schedule_in(
            interval, self.telemetry_tick, node_id, interval, deliver,
            target=node_id, payload="telemetry",
        )
        now = engine.now()
        deliver(Telemetry(position_at(self.states[node_id], now), now))

    def stop_telemetry(self, node_id: NodeId) -> None:
        handle = self._ticks.pop(node_id, None)
        if handle is not None:
            self.engine.cancel(handle)
