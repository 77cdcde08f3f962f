"""End-to-end map building: occupancy, four layer pipelines, fusion, artifacts."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import MapConfig, format_config
from .core import BinaryLayer, ElevationMap, GridSpec, IndexMap, transform_cloud
from .explored import build_elevation_map, build_explored_layer, ground_from_centroids
from .fusion import fuse, trajectory_footprint_layer
from .negative import detect_negative, expand_multi_elevation
from .occupancy import OccupancyOctree, occupied_centroids, to_multi_elevation
from .positive import detect_positive
from .scan_io import Dataset, ensure_dir, write_keyvalue, write_map
from .traversability import aggregate_index, scan_roughness, threshold_traversability, trajectory_indices

LAYER_FILES = ("explored", "positive", "traversable", "negative", "fused")


@dataclass
class MapResult:
    spec: GridSpec
    layers: dict
    elevation: ElevationMap
    index_map: IndexMap
    untraversable: BinaryLayer
    trajectory: BinaryLayer
    counts: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> BinaryLayer:
        return self.layers[name]


def resolve_grid(cfg: MapConfig, dataset: Dataset, points_xy: np.ndarray, margin: float = 1.0) -> GridSpec:
    """Grid from explicit config values, else the dataset hint, else the data extent."""
    l = cfg.resolution
    hint = dataset.grid_hint()
    if hint is not None and not np.isclose(hint.resolution, l):
        hint = None
    if hint is not None:
        origin, size = hint.origin, (hint.width, hint.height)
    else:
        lo = np.floor((points_xy.min(axis=0) - margin) / l) * l
        hi = points_xy.max(axis=0) + margin
        origin = (round(float(lo[0]), 9), round(float(lo[1]), 9))
        size = tuple(int(v) for v in np.ceil((hi - lo) / l))
    origin = cfg.origin_override() or origin
    size = cfg.size_override() or size
    return GridSpec(l, origin, size[0], size[1])


def build_map(dataset: Dataset, cfg: MapConfig | None = None) -> MapResult:
    cfg = cfg or MapConfig()
    timings = {}
    clock = time.perf_counter()

    def lap(name):
        nonlocal clock
        now = time.perf_counter()
        timings[name] = now - clock
        clock = now

    traj = dataset.trajectory
    world = [transform_cloud(s, p) for s, p in zip(dataset.scans, traj.poses)]
    tree = OccupancyOctree(cfg.voxel_size, cfg.sensor_model())
    for scan, pose in zip(world, traj.poses):
        tree.integrate_scan(pose.translation, scan.xyz)
    lap("occupancy")

    gcfg = cfg.ground()
    centroids_g = occupied_centroids(tree, gcfg.occupancy)
    ground = ground_from_centroids(centroids_g, traj, gcfg)
    spec = resolve_grid(cfg, dataset, np.vstack([centroids_g[:, :2], traj.xyz[:, :2]]))
    traj_layer = trajectory_footprint_layer(traj, cfg.footprint_radius, spec)
    m_expl = build_explored_layer(ground.xyz, traj_layer, spec, gcfg)
    elevation = build_elevation_map(ground.xyz, spec)
    lap("explored")

    ocfg = cfg.obstacle()
    m_pos, pos_pts = detect_positive(occupied_centroids(tree, ocfg.occupancy), elevation, spec, ocfg, traj_layer)
    lap("positive")

    tcfg = cfg.traversability()
    tagged = [scan_roughness(s, elevation, tcfg) for s in world]
    index_map = aggregate_index(tagged, spec)
    t_traj = trajectory_indices(index_map, traj, tcfg.footprint)
    m_trav, untrav = threshold_traversability(index_map, traj, t_traj, tcfg, traj_layer)
    lap("traversability")

    ncfg = cfg.negative()
    mem = expand_multi_elevation(to_multi_elevation(tree, spec, ncfg.occupancy), ncfg.expansions)
    m_neg, neg_pts = detect_negative(mem, elevation, untrav, spec, ncfg, traj_layer)
    lap("negative")

    fused = fuse(m_pos, m_neg, m_trav, m_expl, traj_layer)
    lap("fusion")

    layers = {"explored": m_expl, "positive": m_pos, "traversable": m_trav, "negative": m_neg, "fused": fused}
    for name, layer in layers.items():
        layer.name = name
    counts = {
        "scans": len(dataset),
        "points": int(sum(len(s) for s in world)),
        "voxels": len(tree),
        "ground_points": len(ground),
        "obstacle_points": len(pos_pts),
        "negative_points": len(neg_pts),
        "indexed_cells": int((index_map.count > 0).sum()),
    }
    counts.update({f"{k}_true_cells": int(v.data.sum()) for k, v in layers.items()})
    return MapResult(spec, layers, elevation, index_map, untrav, traj_layer, counts, timings)


def write_result(result: MapResult, out_dir, cfg: MapConfig) -> Path:
    """Write the layer artifacts plus a run manifest; returns the output directory."""
    out = ensure_dir(out_dir)
    for name in LAYER_FILES:
        write_map(result.layers[name], out / f"{name}.pgm", name)
    write_map(result.index_map, out / "traversability_index.csv", "traversability_index")
    manifest = {f"config.{k}": v for k, v in cfg.items().items()}
    manifest.update({f"count.{k}": v for k, v in result.counts.items()})
    manifest.update({f"time.{k}": f"{v:.3f}" for k, v in result.timings.items()})
    write_keyvalue(out / "manifest.txt", manifest)
    (out / "config.txt").write_text(format_config(cfg))
    return out
