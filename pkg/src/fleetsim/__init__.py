"""Discrete-event simulation of mobile, communicating nodes."""

from .engine import Engine, EventHandle, ReentrantRun, RunStats, SchedulingInPast, to_ns, to_seconds
from .medium import Medium, MediumConfig, Transmission, UnknownTarget, in_range, resolve_collisions
from .mobility import MotionState, apply_command, arrival_time, position_at
from .protocol import (
    Broadcast,
    GeoPosition,
    GotoCoords,
    GotoGeoCoords,
    Position,
    Protocol,
    Provider,
    Send,
    SetSpeed,
    Telemetry,
    geo_to_local,
)
from .simulation import EncapsulatedNode, NodeRecord, Simulation, encapsulate

__version__ = "0.1.0"
