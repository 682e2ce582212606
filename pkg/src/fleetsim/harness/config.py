"""Scenario configuration, presets and the TOML config-file reader.

A config file is TOML.  Top-level keys map onto :class:`ScenarioConfig`
fields; ``[medium]``, ``[zigzag]`` and ``[geo_reference]`` tables map onto
the nested records.  An optional top-level ``preset`` names the built-in
scenario the file starts from::

    preset = "small"
    duration = 600
    seed = 42

    [medium]
    collision_model = true

    [zigzag]
    offset_mode = "zero"
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ..medium import MediumConfig
from ..protocol import GeoPosition
from ..zigzag import OffsetMode, ZigZagParams

PRESETS: dict[str, tuple[int, int]] = {
    "small": (5, 2),
    "medium": (15, 7),
    "large": (25, 12),
}


class ConfigError(ValueError):
    """Invalid scenario configuration; ``problems`` lists one message per bad field."""

    def __init__(self, problems: list[str]) -> None:
        super().__init__("invalid configuration:\n  " + "\n  ".join(problems))
        self.problems = problems


@dataclass
class ScenarioConfig:
    sensor_count: int = 5
    uav_count: int = 2
    sensor_spacing: float = 300.0
    medium: MediumConfig = field(default_factory=MediumConfig)
    zigzag: ZigZagParams = field(default_factory=ZigZagParams)
    uav_speed: float = 10.0
    uav_altitude: float = 0.0
    stagger_interval: float = 20.0
    duration: float = 3600.0
    seed: int = 0
    runs: int = 1
    telemetry_interval: float = 1.0
    arrival_tolerance: float = 0.5
    geo_reference: GeoPosition | None = None
    mode: str = "fast"

    @classmethod
    def preset(cls, name: str, **overrides: Any) -> ScenarioConfig:
        try:
            sensors, uavs = PRESETS[name]
        except KeyError:
            raise ConfigError([f"preset: unknown preset {name!r}, expected one of {sorted(PRESETS)}"])
        return replace(cls(sensor_count=sensors, uav_count=uavs), **overrides)

    def problems(self) -> list[str]:
        out = []

        def positive(name: str, value: float) -> None:
            if not (isinstance(value, (int, float)) and value > 0 and math.isfinite(value)):
                out.append(f"{name}: must be a finite value > 0, got {value!r}")

        for name in ("sensor_count", "uav_count"):
            value = getattr(self, name)
            if not (isinstance(value, int) and not isinstance(value, bool) and value >= 0):
                out.append(f"{name}: must be an integer >= 0, got {value!r}")
        if not (isinstance(self.runs, int) and self.runs >= 1):
            out.append(f"runs: must be an integer >= 1, got {self.runs!r}")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            out.append(f"seed: must be an unsigned 64-bit integer, got {self.seed!r}")
        for name in ("sensor_spacing", "uav_speed", "duration", "telemetry_interval", "arrival_tolerance"):
            positive(name, getattr(self, name))
        if not (isinstance(self.stagger_interval, (int, float)) and self.stagger_interval >= 0):
            out.append(f"stagger_interval: must be >= 0, got {self.stagger_interval!r}")
        if not (isinstance(self.uav_altitude, (int, float)) and math.isfinite(self.uav_altitude)):
            out.append(f"uav_altitude: must be finite, got {self.uav_altitude!r}")
        if self.mode not in ("fast", "real-time"):
            out.append(f"mode: must be 'fast' or 'real-time', got {self.mode!r}")
        if self.geo_reference is not None:
            lat, lon, _ = self.geo_reference
            if not (-90 <= lat <= 90 and -180 <= lon <= 180):
                out.append(f"geo_reference: latitude/longitude out of range: {self.geo_reference}")
        out.extend(self.medium.problems())
        out.extend(self.zigzag.problems())
        return out

    def validate(self) -> ScenarioConfig:
        problems = self.problems()
        if problems:
            raise ConfigError(problems)
        return self

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["zigzag"]["offset_mode"] = self.zigzag.offset_mode.value
        if self.geo_reference is not None:
            d["geo_reference"] = self.geo_reference._asdict()
        return d


def _build(cls, data: dict[str, Any], prefix: str, problems: list[str], base=None):
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    for key in unknown:
        problems.append(f"{prefix}{key}: unknown field")
    values = {k: v for k, v in data.items() if k in known}
    try:
        return replace(base, **values) if base is not None else cls(**values)
    except (TypeError, ValueError) as exc:
        problems.append(f"{prefix.rstrip('.') or cls.__name__}: {exc}")
        return base if base is not None else cls()


def config_from_dict(data: dict[str, Any]) -> ScenarioConfig:
    """Build and validate a config from parsed TOML (or any nested mapping)."""
    data = dict(data)
    problems: list[str] = []
    preset = data.pop("preset", None)
    base = ScenarioConfig.preset(preset) if preset is not None else ScenarioConfig()

    medium_data = data.pop("medium", {})
    zigzag_data = data.pop("zigzag", {})
    geo_data = data.pop("geo_reference", None)
    for name, table in (("medium", medium_data), ("zigzag", zigzag_data)):
        if not isinstance(table, dict):
            problems.append(f"{name}: must be a table")
    medium = _build(MediumConfig, medium_data if isinstance(medium_data, dict) else {}, "medium.", problems, base.medium)
    zigzag_data = dict(zigzag_data) if isinstance(zigzag_data, dict) else {}
    if "offset_mode" in zigzag_data:
        try:
            zigzag_data["offset_mode"] = OffsetMode(zigzag_data["offset_mode"])
        except ValueError:
            problems.append(
                f"zigzag.offset_mode: must be 'random' or 'zero', got {zigzag_data['offset_mode']!r}"
            )
            del zigzag_data["offset_mode"]
    zigzag = _build(ZigZagParams, zigzag_data, "zigzag.", problems, base.zigzag)

    geo = base.geo_reference
    if geo_data is not None:
        try:
            geo = GeoPosition(**geo_data)
        except TypeError as exc:
            problems.append(f"geo_reference: {exc}")

    cfg = _build(ScenarioConfig, data, "", problems, base)
    cfg = replace(cfg, medium=medium, zigzag=zigzag, geo_reference=geo)
    problems.extend(cfg.problems())
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path: str | Path) -> ScenarioConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError([f"{path}: {exc.strerror or exc}"])
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"{path}: not valid TOML ({exc})"])
    return config_from_dict(data)
