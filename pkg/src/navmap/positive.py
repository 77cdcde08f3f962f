"""Positive obstacles: steep normals, overhead-clearance filter, cluster denoising."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BinaryLayer, ElevationMap, GridSpec, rasterize_points
from .explored import NormalCloud, normal_cloud
from .geometry import NeighborIndex, euclidean_cluster


@dataclass(frozen=True)
class ObstacleConfig:
    occupancy: float = 0.7
    min_slope_deg: float = 15.0
    z_th: float = 1.2
    min_cluster_size: int = 10
    cluster_tolerance: float = 0.2
    normal_radius: float = 0.3
    search_radius: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.occupancy < 1.0:
            raise ValueError("obstacle occupancy threshold must lie in (0, 1)")
        if not self.z_th > 0:
            raise ValueError("z_th must be positive")
        if self.min_cluster_size < 1:
            raise ValueError("min_cluster_size must be >= 1")


def candidate_obstacle_points(centroids: np.ndarray, cfg: ObstacleConfig,
                              index: NeighborIndex | None = None) -> NormalCloud:
    nc = normal_cloud(centroids, cfg.normal_radius, index)
    return nc.subset(nc.slope > np.deg2rad(cfg.min_slope_deg))


def ground_reference(xy: np.ndarray, elevation: ElevationMap, search_radius: float) -> np.ndarray:
    """Ground z^avg under each xy; falls back to the nearest mapped cell, NaN if none."""
    spec = elevation.spec
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    ij, inside = spec.cells_of(xy)
    ref = np.full(len(xy), np.nan)
    ref[inside] = elevation.z_avg[ij[inside, 0], ij[inside, 1]]
    missing = np.isnan(ref)
    valid = elevation.valid
    if missing.any() and valid.any():
        X, Y = spec.cell_centers()
        centers = np.column_stack([X[valid], Y[valid]])
        d, k = NeighborIndex(centers).nearest(xy[missing], search_radius)
        found = k >= 0
        vals = np.full(missing.sum(), np.nan)
        vals[found] = elevation.z_avg[valid][k[found]]
        ref[missing] = vals
    return ref


def height_filter(points: np.ndarray, elevation: ElevationMap, z_th: float,
                  mode: str = "discard_above", search_radius: float = 1.0) -> np.ndarray:
    """Boolean keep-mask for points judged against the ground elevation map.

    ``discard_above`` drops points more than ``z_th`` above the ground and keeps
    points with no ground reference. ``discard_non_ground_band`` keeps only
    points within ``z_th`` of the ground and drops unreferenced points.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    ref = ground_reference(points[:, :2], elevation, search_radius)
    dz = points[:, 2] - ref
    known = ~np.isnan(ref)
    if mode == "discard_above":
        return ~known | (dz <= z_th)
    if mode == "discard_non_ground_band":
        return known & (np.abs(np.where(known, dz, 0.0)) <= z_th)
    raise ValueError(f"unknown height filter mode {mode!r}")


def filter_clusters(points: np.ndarray, cfg: ObstacleConfig) -> list[np.ndarray]:
    return euclidean_cluster(points, cfg.cluster_tolerance, cfg.min_cluster_size)


def build_positive_layer(candidates: np.ndarray, spec: GridSpec, cfg: ObstacleConfig,
                         traj_layer: BinaryLayer | None = None) -> BinaryLayer:
    """True where no denoised obstacle point falls, OR the trajectory footprint."""
    candidates = np.asarray(candidates, dtype=float).reshape(-1, 3)
    clusters = filter_clusters(candidates, cfg)
    keep = np.concatenate(clusters) if clusters else np.zeros(0, dtype=np.int64)
    blocked = rasterize_points(spec, candidates[keep, :2])
    free = ~blocked
    if traj_layer is not None:
        spec.check_same(traj_layer.spec)
        free |= traj_layer.data
    return BinaryLayer(spec, free, "positive")


def detect_positive(centroids: np.ndarray, elevation: ElevationMap, spec: GridSpec,
                    cfg: ObstacleConfig, traj_layer: BinaryLayer | None = None):
    """Full positive-obstacle stage. Returns (layer, surviving candidate points)."""
    cand = candidate_obstacle_points(centroids, cfg)
    keep = height_filter(cand.xyz, elevation, cfg.z_th, "discard_above", cfg.search_radius)
    pts = cand.xyz[keep]
    return build_positive_layer(pts, spec, cfg, traj_layer), pts
