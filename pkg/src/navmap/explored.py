"""Ground extraction: slope filtering, trajectory-connected clustering, explored layer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BinaryLayer, ElevationMap, GridSpec, Trajectory, morph_close, rasterize_points
from .geometry import NeighborIndex, cluster_labels, estimate_normals, slope_angles


class NoGroundFound(RuntimeError):
    pass


@dataclass(frozen=True)
class GroundConfig:
    occupancy: float = 0.5
    max_slope_deg: float = 30.0
    d_xy: float = 0.5
    d_z: float = 0.7
    cluster_tolerance: float = 0.2
    closure_radius: float = 2.0
    normal_radius: float = 0.3

    def __post_init__(self):
        if not 0.0 < self.occupancy < 1.0:
            raise ValueError("ground occupancy threshold must lie in (0, 1)")
        if not 0.0 < self.max_slope_deg < 90.0:
            raise ValueError("ground slope threshold must lie in (0, 90) degrees")


@dataclass
class NormalCloud:
    """Points with unit normals and folded slope angles (radians)."""

    xyz: np.ndarray
    normals: np.ndarray
    slope: np.ndarray

    def __len__(self):
        return len(self.xyz)

    def subset(self, mask) -> "NormalCloud":
        return NormalCloud(self.xyz[mask], self.normals[mask], self.slope[mask])


def normal_cloud(points: np.ndarray, r: float, index: NeighborIndex | None = None) -> NormalCloud:
    """Attach normals and slopes; points without a valid normal are dropped."""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    normals, valid = estimate_normals(points, r, index)
    pts, nrm = points[valid], normals[valid]
    return NormalCloud(pts, nrm, slope_angles(nrm) if len(nrm) else np.zeros(0))


def candidate_ground_points(centroids: np.ndarray, cfg: GroundConfig,
                            index: NeighborIndex | None = None) -> NormalCloud:
    nc = normal_cloud(centroids, cfg.normal_radius, index)
    return nc.subset(nc.slope <= np.deg2rad(cfg.max_slope_deg))


def select_connected_clusters(candidates: NormalCloud, trajectory: Trajectory,
                              cfg: GroundConfig) -> NormalCloud:
    """Keep the candidate clusters that some trajectory pose touches."""
    if len(candidates) == 0:
        raise NoGroundFound("no candidate ground points")
    labels = cluster_labels(candidates.xyz, cfg.cluster_tolerance)
    index2d = NeighborIndex(candidates.xyz[:, :2])
    touched = set()
    for pos in trajectory.xyz:
        near = index2d.radius(pos[:2], cfg.d_xy)
        near = near[np.abs(candidates.xyz[near, 2] - pos[2]) <= cfg.d_z]
        touched.update(np.unique(labels[near]).tolist())
    if not touched:
        raise NoGroundFound("no ground cluster intersects the trajectory")
    return candidates.subset(np.isin(labels, sorted(touched)))


def build_explored_layer(ground_xyz: np.ndarray, traj_layer: BinaryLayer, spec: GridSpec,
                         cfg: GroundConfig) -> BinaryLayer:
    spec.check_same(traj_layer.spec)
    mask = rasterize_points(spec, np.asarray(ground_xyz).reshape(-1, 3)[:, :2]) | traj_layer.data
    return morph_close(BinaryLayer(spec, mask, "explored"), cfg.closure_radius)


def build_elevation_map(ground_xyz: np.ndarray, spec: GridSpec) -> ElevationMap:
    """Per-cell mean, min, max and population variance of ground heights."""
    xyz = np.asarray(ground_xyz, dtype=float).reshape(-1, 3)
    ij, inside = spec.cells_of(xyz[:, :2])
    flat = ij[inside, 0] * spec.height + ij[inside, 1]
    z = xyz[inside, 2]
    n = spec.width * spec.height
    count = np.bincount(flat, minlength=n)
    has = count > 0
    mean = np.full(n, np.nan)
    mean[has] = np.bincount(flat, z, minlength=n)[has] / count[has]
    dev = z - mean[flat]
    var = np.full(n, np.nan)
    var[has] = np.bincount(flat, dev * dev, minlength=n)[has] / count[has]
    zmin = np.full(n, np.inf)
    zmax = np.full(n, -np.inf)
    np.minimum.at(zmin, flat, z)
    np.maximum.at(zmax, flat, z)
    zmin[~has] = np.nan
    zmax[~has] = np.nan
    shape = spec.shape
    return ElevationMap(spec, mean.reshape(shape), zmin.reshape(shape), zmax.reshape(shape),
                        var.reshape(shape))


def ground_from_centroids(centroids: np.ndarray, trajectory: Trajectory, cfg: GroundConfig) -> NormalCloud:
    return select_connected_clusters(candidate_ground_points(centroids, cfg), trajectory, cfg)
