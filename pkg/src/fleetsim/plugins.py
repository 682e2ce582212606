"""Mobility helpers built only on the :class:`~fleetsim.protocol.Provider` API.

Each helper lives inside a protocol, issues ordinary mobility commands through
the protocol's provider, and learns where the node is from the telemetry the
protocol forwards to it.
"""

from __future__ import annotations

import enum
from typing import Sequence

from .protocol import GotoCoords, Position, Provider, Telemetry, distance

DEFAULT_ARRIVAL_TOLERANCE = 0.5


class EmptyMission(ValueError):
    pass


class NotStarted(RuntimeError):
    pass


class Direction(enum.IntEnum):
    FORWARD = 1
    REVERSE = -1


class LoopPolicy(enum.Enum):
    STOP = "stop"
    REVERSE_AT_ENDS = "reverse_at_ends"


class MissionMobility:
    """Fly through a list of waypoints.

    A waypoint counts as reached when a telemetry report puts the node within
    ``tolerance`` of it; the mission then moves on to the neighbouring
    waypoint in the current direction.  At either end the mission stops or
    turns around depending on ``loop_policy``.

    ``leg_from`` is the waypoint the node last reached (None before the first
    arrival) and ``current_index`` the waypoint it is flying to.
    """

    def __init__(
        self,
        provider: Provider,
        loop_policy: LoopPolicy = LoopPolicy.REVERSE_AT_ENDS,
        tolerance: float = DEFAULT_ARRIVAL_TOLERANCE,
    ) -> None:
        self.provider = provider
        self.loop_policy = loop_policy
        self.tolerance = tolerance
        self.waypoints: list[Position] = []
        self.direction = Direction.FORWARD
        self.current_index = 0
        self.leg_from: int | None = None
        self.position: Position | None = None
        self.started = False
        self.finished = False
        self.visited: list[int] = []

    def start(self, waypoints: Sequence[Sequence[float]], current_position: Sequence[float] | None = None) -> None:
        if len(waypoints) == 0:
            raise EmptyMission("a mission needs at least one waypoint")
        self.waypoints = [Position(*w) for w in waypoints]
        self.direction = Direction.FORWARD
        self.current_index = 0
        self.leg_from = None
        self.started = True
        self.finished = False
        self.visited = []
        if current_position is not None:
            self.position = Position(*current_position)
        self._goto()
        if self.position is not None:
            self._check_arrival()

    def on_telemetry(self, telemetry: Telemetry) -> None:
        self.position = telemetry.current_position
        if self.started and not self.finished:
            self._check_arrival()

    def _goto(self) -> None:
        self.provider.send_command(GotoCoords(self.waypoints[self.current_index]))

    def _check_arrival(self) -> None:
        if distance(self.position, self.waypoints[self.current_index]) > self.tolerance:
            return
        reached = self.current_index
        self.leg_from = reached
        self.visited.append(reached)
        nxt = self._next_from(reached)
        if nxt is None:
            self.finished = True
            return
        self.current_index = nxt
        self._goto()

    def _next_from(self, index: int) -> int | None:
        """Neighbour of ``index`` in the current direction, turning around if the policy allows."""
        n = len(self.waypoints)
        nxt = index + self.direction
        if 0 <= nxt < n:
            return nxt
        if self.loop_policy is LoopPolicy.STOP or n == 1:
            return None
        self.direction = Direction(-self.direction)
        return index + self.direction

    def reverse(self) -> None:
        """Turn around on the spot and head back along the mission."""
        if not self.started:
            raise NotStarted("reverse() called before start()")
        self.direction = Direction(-self.direction)
        if self.leg_from is None:
            return
        at_last = (
            self.position is not None
            and distance(self.position, self.waypoints[self.leg_from]) <= self.tolerance
        )
        if at_last:
            nxt = self._next_from(self.leg_from)
            if nxt is None:
                self.current_index = self.leg_from
                self.finished = True
                return
            self.current_index = nxt
        else:
            self.leg_from, self.current_index = self.current_index, self.leg_from
        self.finished = False
        self._goto()

    def set_direction(self, direction: Direction) -> None:
        if direction != self.direction:
            self.reverse()

    @property
    def progress(self) -> float:
        """Position along the mission as waypoint index plus fraction of the current leg."""
        if self.leg_from is None or self.position is None:
            return float(self.leg_from if self.leg_from is not None else self.current_index)
        i, j = self.leg_from, self.current_index
        if i == j:
            return float(i)
        leg = distance(self.waypoints[i], self.waypoints[j])
        f = 0.0 if leg == 0 else min(1.0, distance(self.waypoints[i], self.position) / leg)
        return i + (j - i) * f


class RandomMobility:
    """Wander between points drawn uniformly from an axis-aligned box."""

    def __init__(
        self,
        provider: Provider,
        bounds: tuple[Sequence[float], Sequence[float]],
        tolerance: float = DEFAULT_ARRIVAL_TOLERANCE,
    ) -> None:
        lo, hi = bounds
        if any(l > h for l, h in zip(lo, hi)) or all(l == h for l, h in zip(lo, hi)):
            raise ValueError(f"degenerate bounds {bounds}")
        self.provider = provider
        self.low = Position(*lo)
        self.high = Position(*hi)
        self.tolerance = tolerance
        self.target: Position | None = None

    def draw(self) -> Position:
        rng = self.provider.random()
        return Position(*(rng.uniform(l, h) for l, h in zip(self.low, self.high)))

    def step(self) -> Position:
        self.target = self.draw()
        self.provider.send_command(GotoCoords(self.target))
        return self.target

    start = step

    def on_telemetry(self, telemetry: Telemetry) -> None:
        if self.target is not None and distance(telemetry.current_position, self.target) <= self.tolerance:
            self.step()


class Follower:
    """Chase a leader at a fixed offset; the caller supplies leader positions."""

    def __init__(self, provider: Provider, offset: Sequence[float] = (0.0, 0.0, 0.0)) -> None:
        self.provider = provider
        self.offset = Position(*offset)

    def update(self, leader_position: Sequence[float]) -> Position:
        goal = Position(*(p + o for p, o in zip(leader_position, self.offset)))
        self.provider.send_command(GotoCoords(goal))
        return goal
