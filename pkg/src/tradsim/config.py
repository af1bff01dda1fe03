"""Scenario and sweep configuration.

Configs are YAML mappings mirroring the dataclasses below. The defaults are
the reference evaluation settings, so an empty config file runs the
reference urban scenario.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any

import yaml

from .baselines import FloodingParams, Slotted1PParams
from .geo import GridMapParams, HighwayMapParams
from .mobility import DriftModel
from .radio import RadioParams
from .trad import ProtocolParams

PROTOCOLS = ("trad", "flooding", "slotted1p")
URBAN_TRAFFIC = ("uniform", "confined")
DENSITY_AXIS = (40, 60, 80, 100, 120, 140, 160)
FLOW_AXIS = (450.0, 896.4, 1353.6, 1803.6, 2257.2)
DRIFT_AXIS = (0.0, 25.0, 50.0, 75.0, 100.0)
AXES = {"density": DENSITY_AXIS, "flow": FLOW_AXIS, "drift": DRIFT_AXIS}


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key path."""

    def __init__(self, field_name: str, message: str) -> None:
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class MapSpec:
    kind: str = "grid"  # grid | highway | file
    grid: GridMapParams = GridMapParams()
    highway: HighwayMapParams = HighwayMapParams()
    path: str = ""


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "urban"
    map: MapSpec = MapSpec()
    traffic: str = "uniform"          # urban: uniform | confined; ignored on highways
    density: float = 80.0             # vehicles / km^2 (urban)
    flow: float = 0.0                 # vehicles / hour over both directions (highway)
    protocol: str = "trad"
    trad: ProtocolParams = ProtocolParams()
    flooding: FloodingParams = FloodingParams()
    slotted1p: Slotted1PParams = Slotted1PParams()
    radio: RadioParams = RadioParams()
    drift: DriftModel = DriftModel()
    data_period: float = 2.0
    max_messages: int = 0             # 0 = no cap
    warmup: float = 120.0
    sim_duration: float = 200.0
    drain: float = 20.0
    beacon_lead: float = 3.0
    mobility_step: float = 0.1
    carrier_sense: bool = True
    urban_speed: tuple[float, float] = (8.0, 14.0)
    highway_speed: tuple[float, float] = (25.0, 36.0)
    coverage_period: float = 0.5
    seed: int = 1
    repetitions: int = 5

    @property
    def scenario_kind(self) -> str:
        return "highway" if self.map.kind == "highway" else "urban"

    def echo(self) -> dict:
        return {"scenario": self.name, "protocol": self.protocol,
                "pattern": "highway" if self.scenario_kind == "highway" else self.traffic,
                "density": self.density if self.scenario_kind == "urban" else "",
                "flow": self.flow if self.scenario_kind == "highway" else "",
                "drift": self.drift.deviation}


def validate(cfg: ScenarioConfig) -> ScenarioConfig:
    if cfg.map.kind not in ("grid", "highway", "file"):
        raise ConfigError("map.kind", f"unknown map kind {cfg.map.kind!r}")
    if cfg.map.kind == "file" and not cfg.map.path:
        raise ConfigError("map.path", "file maps need a path")
    if cfg.protocol not in PROTOCOLS:
        raise ConfigError("protocol", f"expected one of {PROTOCOLS}")
    if cfg.scenario_kind == "urban":
        if cfg.traffic not in URBAN_TRAFFIC:
            raise ConfigError("traffic", f"expected one of {URBAN_TRAFFIC}")
        if cfg.density < 0:
            raise ConfigError("density", "must be >= 0")
        if cfg.flow:
            raise ConfigError("flow", "flow applies to highway maps only")
    else:
        if cfg.flow < 0:
            raise ConfigError("flow", "must be >= 0")
        if cfg.density:
            raise ConfigError("density", "density applies to urban maps; set 0 on highways")
    for name in ("data_period", "sim_duration", "mobility_step", "coverage_period"):
        if getattr(cfg, name) <= 0:
            raise ConfigError(name, "must be positive")
    for name in ("warmup", "drain", "beacon_lead"):
        if getattr(cfg, name) < 0:
            raise ConfigError(name, "must be >= 0")
    if cfg.warmup + cfg.drain >= cfg.sim_duration:
        raise ConfigError("sim_duration", "must exceed warmup + drain")
    if cfg.max_messages < 0:
        raise ConfigError("max_messages", "must be >= 0")
    if cfg.repetitions < 1:
        raise ConfigError("repetitions", "must be >= 1")
    for name in ("urban_speed", "highway_speed"):
        lo, hi = getattr(cfg, name)
        if not 0 < lo <= hi:
            raise ConfigError(name, "need 0 < low <= high")
    return cfg


# --- dict <-> dataclass -------------------------------------------------------------

def to_dict(obj: Any) -> Any:
    if is_dataclass(obj):
        return {f.name: to_dict(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, tuple):
        return [to_dict(v) for v in obj]
    return obj


def _build(cls, data: Any, path: str):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(path or "<root>", "expected a mapping")
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        where = f"{path}.{key}" if path else key
        if key not in known:
            raise ConfigError(where, "unknown field")
        default = getattr(cls(), key) if _defaults_ok(cls) else None
        if is_dataclass(default):
            kwargs[key] = _build(type(default), value, where)
        else:
            kwargs[key] = _coerce(default, value, where)
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(path or "<root>", str(exc)) from None


def _defaults_ok(cls) -> bool:
    return all(f.default is not dataclasses.MISSING or f.default_factory is not dataclasses.MISSING
               for f in fields(cls))


def _coerce(default: Any, value: Any, where: str) -> Any:
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(where, "expected a boolean")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(where, "expected an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(where, "expected a number")
        if not math.isfinite(value):
            raise ConfigError(where, "must be finite")
        return float(value)
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)) or len(value) != len(default):
            raise ConfigError(where, f"expected a list of {len(default)} values")
        return tuple(_coerce(d, v, where) for d, v in zip(default, value))
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(where, "expected a string")
        return value
    return value


def from_dict(data: dict) -> ScenarioConfig:
    return validate(_build(ScenarioConfig, data, ""))


def dumps(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(to_dict(cfg), sort_keys=False)


def loads(text: str) -> ScenarioConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"not valid YAML: {exc}") from None
    return from_dict(data or {})


def load(path: str | Path) -> ScenarioConfig:
    return loads(Path(path).read_text())


def save(cfg: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(dumps(cfg))


# --- sweeps --------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    base: ScenarioConfig = ScenarioConfig()
    axis: str = "density"
    values: tuple[float, ...] = ()
    seeds: int = 5
    protocols: tuple[str, ...] = ()

    def axis_values(self) -> tuple[float, ...]:
        return tuple(self.values) if self.values else AXES[self.axis]

    def protocol_list(self) -> tuple[str, ...]:
        return tuple(self.protocols) if self.protocols else (self.base.protocol,)


def validate_sweep(spec: SweepSpec) -> SweepSpec:
    if spec.axis not in AXES:
        raise ConfigError("axis", f"expected one of {tuple(AXES)}")
    if spec.seeds < 1:
        raise ConfigError("seeds", "must be >= 1")
    vals = spec.axis_values()
    if spec.axis == "density" and any(not 40 <= v <= 160 for v in vals):
        raise ConfigError("values", "density axis spans 40..160 v/km^2")
    if spec.axis in ("flow", "drift"):
        bad = [v for v in vals if v not in AXES[spec.axis]]
        if bad:
            raise ConfigError("values", f"{bad} not in the {spec.axis} level set")
    for p in spec.protocol_list():
        if p not in PROTOCOLS:
            raise ConfigError("protocols", f"unknown protocol {p!r}")
    validate(spec.base)
    return spec


def apply_axis(cfg: ScenarioConfig, axis: str, value: float) -> ScenarioConfig:
    if axis == "density":
        return dataclasses.replace(cfg, density=float(value))
    if axis == "flow":
        return dataclasses.replace(cfg, flow=float(value))
    if axis == "drift":
        return dataclasses.replace(cfg, drift=dataclasses.replace(cfg.drift, deviation=float(value)))
    raise ConfigError("axis", f"unknown axis {axis!r}")
