"""Builds the line-of-sensors ferrying scenario from a :class:`ScenarioConfig`."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..engine import Engine
from ..protocol import NodeId, Position
from ..simulation import Simulation
from ..zigzag import MessageKind, ZigZagGroundStation, ZigZagSensor, ZigZagUAV
from .config import ScenarioConfig

COLORS = {"ground_station": "#2ca02c", "sensor": "#1f77b4", "uav": "#d62728"}

_SENSOR_DATA = int(MessageKind.SENSOR_DATA)


@dataclass
class Scenario:
    config: ScenarioConfig
    simulation: Simulation
    ground_station: ZigZagGroundStation
    ground_station_id: NodeId
    sensors: dict[NodeId, ZigZagSensor] = field(default_factory=dict)
    uavs: dict[NodeId, ZigZagUAV] = field(default_factory=dict)
    sensor_data_delivered: int = 0

    def roles(self) -> dict[NodeId, str]:
        return {nid: node.record.role for nid, node in self.simulation.nodes.items()}

    @property
    def gs_collected(self) -> int:
        return self.ground_station.collected

    def uav_total(self) -> int:
        return sum(u.data_count for u in self.uavs.values())

    def conservation_gap(self) -> int:
        """Ground-station total plus UAV holdings minus sensor data delivered; zero when conserved."""
        return self.gs_collected + self.uav_total() - self.sensor_data_delivered

    def _count_delivery(self, receiver: NodeId, payload: bytes) -> None:
        if payload[0] == _SENSOR_DATA and receiver in self.uavs:
            self.sensor_data_delivered += 1


def launch_times(cfg: ScenarioConfig) -> list[float]:
    return [k * cfg.stagger_interval for k in range(1, cfg.uav_count + 1)]


def build_scenario(cfg: ScenarioConfig, seed: int | None = None, engine: Engine | None = None) -> Scenario:
    """Ground station at the origin, sensors every ``sensor_spacing`` metres along +x,
    UAVs parked on the ground station and released one by one."""
    cfg.validate()
    if engine is None:
        engine = Engine(seed=cfg.seed if seed is None else seed, mode=cfg.mode)
    sim = Simulation(
        engine,
        medium=cfg.medium,
        telemetry_interval=cfg.telemetry_interval,
        default_speed=cfg.uav_speed,
        geo_reference=cfg.geo_reference,
    )
    home = Position(0.0, 0.0, 0.0)
    gs = ZigZagGroundStation(cfg.zigzag)
    gs_id = sim.add_node(gs, home, role="ground_station", color=COLORS["ground_station"])
    scenario = Scenario(cfg, sim, gs, gs_id)

    sensor_positions = [
        Position(cfg.sensor_spacing * k, 0.0, 0.0) for k in range(1, cfg.sensor_count + 1)
    ]
    for pos in sensor_positions:
        sensor = ZigZagSensor()
        scenario.sensors[sim.add_node(sensor, pos, role="sensor", color=COLORS["sensor"])] = sensor

    alt = cfg.uav_altitude
    mission = [Position(0.0, 0.0, alt)] + [Position(p.x, p.y, alt) for p in sensor_positions]
    for t in launch_times(cfg):
        uav = ZigZagUAV(mission, cfg.zigzag, arrival_tolerance=cfg.arrival_tolerance)
        nid = sim.add_node(uav, Position(0.0, 0.0, alt), role="uav", launch_at=t,
                           color=COLORS["uav"], speed=cfg.uav_speed)
        scenario.uavs[nid] = uav

    sim.delivery_observers.append(scenario._count_delivery)
    return scenario
