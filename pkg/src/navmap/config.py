"""Flat ``key = value`` run configuration with built-in defaults."""

from __future__ import annotations

from dataclasses import dataclass, fields

from .explored import GroundConfig
from .negative import NegativeConfig
from .occupancy import SensorModel
from .positive import ObstacleConfig
from .scan_io import read_keyvalue
from .traversability import TraversabilityConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class MapConfig:
    resolution: float = 0.1
    voxel_size: float = 0.1
    grid_origin: str = "auto"
    grid_size: str = "auto"
    p_hit: float = 0.7
    p_miss: float = 0.4
    clamp_min: float = 0.12
    clamp_max: float = 0.97
    max_ray_length: float = 20.0
    normal_radius: float = 0.3
    ground_occupancy: float = 0.5
    ground_max_slope_deg: float = 30.0
    ground_d_xy: float = 0.5
    ground_d_z: float = 0.7
    ground_cluster_tolerance: float = 0.2
    closure_radius: float = 2.0
    obstacle_occupancy: float = 0.7
    obstacle_min_slope_deg: float = 15.0
    obstacle_z_th: float = 1.2
    obstacle_min_cluster_size: int = 10
    obstacle_cluster_tolerance: float = 0.2
    height_filter_search_radius: float = 1.0
    trav_gamma: float = 0.75
    trav_t_min: float = 200.0
    trav_radius: float = 0.3
    trav_z_band: float = 0.3
    trav_closure_radius: float = 2.0
    trav_min_points: int = 3
    footprint_radius: float = 0.3
    neg_expansions: int = 5
    neg_occupancy: float = 0.5
    neg_closure_radius: float = 0.0

    def __post_init__(self):
        for name in ("resolution", "voxel_size", "max_ray_length", "normal_radius", "footprint_radius"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        # build every stage config once so bad values fail at load time
        try:
            self.sensor_model(), self.ground(), self.obstacle(), self.traversability(), self.negative()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        self.origin_override()
        self.size_override()

    def origin_override(self):
        if self.grid_origin == "auto":
            return None
        try:
            x, y = (float(v) for v in self.grid_origin.split(","))
        except ValueError:
            raise ConfigError("grid_origin must be 'auto' or 'x,y'") from None
        return x, y

    def size_override(self):
        if self.grid_size == "auto":
            return None
        try:
            w, h = (int(v) for v in self.grid_size.split(","))
        except ValueError:
            raise ConfigError("grid_size must be 'auto' or 'width,height'") from None
        if w < 1 or h < 1:
            raise ConfigError("grid_size entries must be >= 1")
        return w, h

    def sensor_model(self) -> SensorModel:
        return SensorModel(self.p_hit, self.p_miss, self.clamp_min, self.clamp_max, self.max_ray_length)

    def ground(self) -> GroundConfig:
        return GroundConfig(self.ground_occupancy, self.ground_max_slope_deg, self.ground_d_xy,
                            self.ground_d_z, self.ground_cluster_tolerance, self.closure_radius,
                            self.normal_radius)

    def obstacle(self) -> ObstacleConfig:
        return ObstacleConfig(self.obstacle_occupancy, self.obstacle_min_slope_deg, self.obstacle_z_th,
                              self.obstacle_min_cluster_size, self.obstacle_cluster_tolerance,
                              self.normal_radius, self.height_filter_search_radius)

    def traversability(self) -> TraversabilityConfig:
        return TraversabilityConfig(self.trav_gamma, self.trav_t_min, self.trav_radius, self.trav_z_band,
                                    self.footprint_radius, self.trav_closure_radius,
                                    self.height_filter_search_radius, self.trav_min_points)

    def negative(self) -> NegativeConfig:
        return NegativeConfig(self.neg_expansions, self.neg_occupancy, self.neg_closure_radius,
                              self.obstacle())

    def items(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def parse_config(items: dict[str, str]) -> MapConfig:
    """Strict parse: every key must be present and no unknown key is allowed."""
    known = {f.name: f for f in fields(MapConfig)}
    unknown = sorted(set(items) - set(known))
    if unknown:
        raise ConfigError(f"unknown config key: {unknown[0]}")
    values = {}
    for name, f in known.items():
        if name not in items:
            raise ConfigError(f"missing config key: {name}")
        raw = items[name].strip()
        try:
            values[name] = raw if f.type == "str" else int(raw) if f.type == "int" else float(raw)
        except ValueError:
            raise ConfigError(f"config key {name}: cannot parse {raw!r} as {f.type}") from None
    return MapConfig(**values)


def load_config(path) -> MapConfig:
    return parse_config(read_keyvalue(path))


def format_config(cfg: MapConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in cfg.items().items())
