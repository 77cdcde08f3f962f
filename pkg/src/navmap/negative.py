"""Negative obstacles: shadow filling by min-elevation expansion, then re-detection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .core import BinaryLayer, ElevationMap, GridSpec, MultiElevationMap, morph_close, rasterize_points
from .positive import ObstacleConfig, candidate_obstacle_points, filter_clusters, height_filter


@dataclass(frozen=True)
class NegativeConfig:
    expansions: int = 5
    occupancy: float = 0.5
    closure_radius: float = 0.0
    obstacle: ObstacleConfig = field(default_factory=ObstacleConfig)

    def __post_init__(self):
        if self.expansions < 1:
            raise ValueError("expansions must be >= 1")


_NEIGHBORS8 = np.array([[1, 1, 1], [1, 0, 1], [1, 1, 1]], dtype=bool)


def expand_multi_elevation(mem: MultiElevationMap, expansions: int) -> MultiElevationMap:
    """Fill empty cells with the minimum elevation of their 8 neighbours, ``expansions`` times.

    Each pass reads only the previous pass's state. Measured cells keep every
    value; filled cells hold a single value and are flagged synthesized.
    """
    if expansions < 1:
        raise ValueError("expansions must be >= 1")
    spec = mem.spec
    cur = mem.min_map()
    measured = np.isfinite(cur)
    if not measured.any():
        raise ValueError("multi-elevation map has no measured cell")
    for _ in range(expansions):
        nbr_min = ndimage.minimum_filter(cur, footprint=_NEIGHBORS8, mode="constant", cval=np.inf)
        empty = ~np.isfinite(cur)
        cur = np.where(empty & np.isfinite(nbr_min), nbr_min, cur)
    synth = np.isfinite(cur) & ~measured | mem.synthesized

    counts = np.diff(mem.ptr).reshape(spec.shape).copy()
    new_cells = synth & ~measured
    counts[new_cells] = 1
    flat_counts = counts.ravel()
    ptr = np.concatenate([[0], np.cumsum(flat_counts)])
    z = np.empty(ptr[-1])
    old_counts = np.diff(mem.ptr)
    keep_old = old_counts > 0
    # copy measured runs, then drop synthesized singletons in
    dst = np.repeat(ptr[:-1][keep_old], old_counts[keep_old]) + _run_offsets(old_counts[keep_old])
    z[dst] = mem.z
    z[ptr[:-1][new_cells.ravel()]] = cur.ravel()[new_cells.ravel()]
    return MultiElevationMap(spec, ptr, z, synth, mem.dropped)


def _run_offsets(counts: np.ndarray) -> np.ndarray:
    total = int(counts.sum())
    starts = np.repeat(np.cumsum(counts) - counts, counts)
    return np.arange(total) - starts


def detect_negative(mem_expanded: MultiElevationMap, elevation: ElevationMap,
                    untraversable: BinaryLayer, spec: GridSpec, cfg: NegativeConfig,
                    traj_layer: BinaryLayer | None = None):
    """Negative-obstacle layer from an expanded multi-elevation map.

    Obstacle clusters are kept only if their footprint touches a measured
    untraversable cell. Returns ``(layer, kept points)``.
    """
    for other in (mem_expanded.spec, elevation.spec, untraversable.spec):
        spec.check_same(other)
    ocfg = cfg.obstacle
    cloud = mem_expanded.to_points()
    cand = candidate_obstacle_points(cloud, ocfg)
    keep = height_filter(cand.xyz, elevation, ocfg.z_th, "discard_above", ocfg.search_radius)
    pts = cand.xyz[keep]
    kept = []
    for cl in filter_clusters(pts, ocfg):
        ij, inside = spec.cells_of(pts[cl, :2])
        if np.any(untraversable.data[ij[inside, 0], ij[inside, 1]]):
            kept.append(cl)
    kept_pts = pts[np.concatenate(kept)] if kept else np.zeros((0, 3))
    free = ~rasterize_points(spec, kept_pts[:, :2])
    if traj_layer is not None:
        spec.check_same(traj_layer.spec)
        free |= traj_layer.data
    layer = morph_close(BinaryLayer(spec, free, "negative"), cfg.closure_radius)
    return layer, kept_pts
