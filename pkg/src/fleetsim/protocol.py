"""Environment-agnostic contract between node logic and whatever runs it.

A protocol subclasses :class:`Protocol` and reacts to five events.  It acts on
the world only through the :class:`Provider` injected into it at run time,
by sending mobility and communication commands, managing timers, and
recording tracked variables.  The same protocol object can therefore be
driven by the full simulator or by a scripted mock.
"""

from __future__ import annotations

import math
import random
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Hashable, NamedTuple, Union

from .engine import EventHandle

NodeId = int
TimerTag = Hashable

METERS_PER_DEGREE = 111_320.0


class DoubleEncapsulation(RuntimeError):
    pass


class ProviderContextError(RuntimeError):
    """A provider method was called outside a protocol callback."""


class MissingReference(ValueError):
    pass


class InvalidSpeed(ValueError):
    pass


class Position(NamedTuple):
    x: float
    y: float
    z: float = 0.0


class GeoPosition(NamedTuple):
    latitude: float
    longitude: float
    altitude: float = 0.0


def distance(a: tuple[float, float, float], b: tuple[float, float, float]) -> float:
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2)


def geo_to_local(g: GeoPosition, reference: GeoPosition | None) -> Position:
    """Equirectangular projection of ``g`` onto a tangent plane at ``reference``."""
    if reference is None:
        raise MissingReference("no geographic reference origin is configured")
    lat0 = math.radians(reference.latitude)
    return Position(
        (g.longitude - reference.longitude) * math.cos(lat0) * METERS_PER_DEGREE,
        (g.latitude - reference.latitude) * METERS_PER_DEGREE,
        g.altitude,
    )


@dataclass(frozen=True)
class Telemetry:
    current_position: Position
    timestamp: float


# -- mobility commands ---------------------------------------------------------


@dataclass(frozen=True)
class GotoCoords:
    position: Position

    def __post_init__(self) -> None:
        if not all(math.isfinite(c) for c in self.position):
            raise ValueError(f"non-finite GOTO target {self.position}")


@dataclass(frozen=True)
class GotoGeoCoords:
    position: GeoPosition

    def __post_init__(self) -> None:
        lat, lon, alt = self.position
        if not (-90 <= lat <= 90 and -180 <= lon <= 180 and math.isfinite(alt)):
            raise ValueError(f"geographic position out of range: {self.position}")


@dataclass(frozen=True)
class SetSpeed:
    speed: float

    def __post_init__(self) -> None:
        if not (self.speed > 0 and math.isfinite(self.speed)):
            raise InvalidSpeed(f"speed must be positive and finite, got {self.speed}")


MobilityCommand = Union[GotoCoords, GotoGeoCoords, SetSpeed]


# -- communication commands ----------------------------------------------------


def _check_payload(payload: bytes) -> None:
    if not isinstance(payload, (bytes, bytearray)) or len(payload) == 0:
        raise ValueError("payload must be a non-empty byte sequence")


@dataclass(frozen=True)
class Send:
    target: NodeId
    payload: bytes

    def __post_init__(self) -> None:
        _check_payload(self.payload)


@dataclass(frozen=True)
class Broadcast:
    payload: bytes

    def __post_init__(self) -> None:
        _check_payload(self.payload)


CommunicationCommand = Union[Send, Broadcast]
Command = Union[MobilityCommand, CommunicationCommand]


# -- the two interfaces ----------------------------------------------------------


class Provider(ABC):
    """Capabilities an environment injects into a protocol."""

    @abstractmethod
    def send_command(self, command: Command) -> None: ...

    @abstractmethod
    def schedule_timer(self, tag: TimerTag, fire_at: float) -> EventHandle: ...

    @abstractmethod
    def cancel_timer(self, handle: EventHandle) -> bool: ...

    @abstractmethod
    def current_time(self) -> float: ...

    @abstractmethod
    def own_id(self) -> NodeId: ...

    @abstractmethod
    def record_tracked_variable(self, name: str, value: float | int | str) -> None: ...

    @abstractmethod
    def random(self) -> random.Random:
        """The environment's seeded random generator."""


class Protocol(ABC):
    """Base class for node logic.

    ``provider`` is assigned by the encapsulator before ``on_initialize`` runs.
    """

    provider: Provider

    @abstractmethod
    def on_initialize(self) -> None: ...

    @abstractmethod
    def on_message_received(self, payload: bytes) -> None: ...

    @abstractmethod
    def on_timer_fired(self, tag: TimerTag) -> None: ...

    @abstractmethod
    def on_telemetry(self, telemetry: Telemetry) -> None: ...

    @abstractmethod
    def on_finish(self) -> None: ...
