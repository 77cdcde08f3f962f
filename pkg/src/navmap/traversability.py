"""Ring-roughness traversability index and its trajectory-relative threshold."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BinaryLayer, ElevationMap, GridSpec, IndexMap, PointCloud, Trajectory, morph_close
from .geometry import NeighborIndex, eigen2d_all
from .positive import height_filter

LAMBDA_FLOOR = 1e-12


class NoCoverage(RuntimeError):
    pass


@dataclass(frozen=True)
class TraversabilityConfig:
    gamma: float = 0.75
    t_min: float = 200.0
    radius: float = 0.3
    z_band: float = 0.3
    footprint: float = 0.3
    closure_radius: float = 2.0
    search_radius: float = 1.0
    min_points: int = 3

    def __post_init__(self):
        if self.min_points < 3:
            raise ValueError("min_points must be >= 3")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if not self.t_min > 1.0:
            raise ValueError("t_min must exceed 1")


@dataclass
class TaggedCloud:
    xy: np.ndarray
    t: np.ndarray

    def __len__(self):
        return len(self.t)


def ring_index(xy: np.ndarray, ring: np.ndarray, radius: float,
               min_points: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalue ratio per point with neighbours drawn from the same ring only.

    Returns ``(t, valid)``; a point is valid with >= ``min_points`` neighbours
    (itself included).
    """
    t = np.full(len(xy), np.nan)
    valid = np.zeros(len(xy), dtype=bool)
    for r in np.unique(ring):
        sel = np.flatnonzero(ring == r)
        lmax, lmin, ok = eigen2d_all(xy[sel], radius, min_points=min_points)
        t[sel] = lmax / np.maximum(lmin, LAMBDA_FLOOR)
        valid[sel] = ok & (lmax > 0)
    return t, valid


def scan_roughness(scan: PointCloud, elevation: ElevationMap, cfg: TraversabilityConfig) -> TaggedCloud:
    """Tag one world-frame scan's near-ground points with their roughness index."""
    if scan.frame != "world":
        raise ValueError("scan_roughness expects a world-frame scan")
    if scan.ring is None:
        raise ValueError("scan_roughness needs ring ids")
    band = height_filter(scan.xyz, elevation, cfg.z_band, "discard_non_ground_band", cfg.search_radius)
    xy = scan.xyz[band, :2]
    t, valid = ring_index(xy, scan.ring[band], cfg.radius, cfg.min_points)
    return TaggedCloud(xy[valid], t[valid])


def aggregate_index(tagged: list[TaggedCloud], spec: GridSpec) -> IndexMap:
    n = spec.width * spec.height
    total = np.zeros(n)
    count = np.zeros(n, dtype=np.int64)
    for tc in tagged:
        ij, inside = spec.cells_of(tc.xy)
        flat = ij[inside, 0] * spec.height + ij[inside, 1]
        total += np.bincount(flat, tc.t[inside], minlength=n)
        count += np.bincount(flat, minlength=n)
    return IndexMap(spec, total.reshape(spec.shape), count.reshape(spec.shape))


def footprint_cells(spec: GridSpec, center_xy, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """Indices of cells whose centers lie within ``radius`` of ``center_xy``."""
    l = spec.resolution
    cx, cy = center_xy
    i0 = max(int(np.floor((cx - radius - spec.origin[0]) / l)), 0)
    i1 = min(int(np.floor((cx + radius - spec.origin[0]) / l)), spec.width - 1)
    j0 = max(int(np.floor((cy - radius - spec.origin[1]) / l)), 0)
    j1 = min(int(np.floor((cy + radius - spec.origin[1]) / l)), spec.height - 1)
    if i1 < i0 or j1 < j0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    ii, jj = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1 + 1), indexing="ij")
    xs = spec.origin[0] + (ii + 0.5) * l
    ys = spec.origin[1] + (jj + 0.5) * l
    inside = (xs - cx) ** 2 + (ys - cy) ** 2 <= radius * radius
    return ii[inside], jj[inside]


def trajectory_indices(index_map: IndexMap, trajectory: Trajectory, footprint: float) -> np.ndarray:
    """Per-pose mean of the non-empty cell averages under the robot footprint.

    Poses without coverage take the previous pose's value; leading uncovered
    poses take the first valid value.
    """
    avg = index_map.average
    vals = np.full(len(trajectory), np.nan)
    for k, pos in enumerate(trajectory.xyz):
        ii, jj = footprint_cells(index_map.spec, pos[:2], footprint)
        cells = avg[ii, jj]
        cells = cells[~np.isnan(cells)]
        if len(cells):
            vals[k] = cells.mean()
    ok = np.flatnonzero(~np.isnan(vals))
    if len(ok) == 0:
        raise NoCoverage("no trajectory pose covers any indexed cell")
    vals[:ok[0]] = vals[ok[0]]
    for k in range(ok[0] + 1, len(vals)):
        if np.isnan(vals[k]):
            vals[k] = vals[k - 1]
    return vals


def nearest_pose(spec: GridSpec, trajectory: Trajectory) -> np.ndarray:
    """Index of the xy-closest pose for every cell center; ties go to the earlier pose."""
    X, Y = spec.cell_centers()
    centers = np.column_stack([X.ravel(), Y.ravel()])
    poses = trajectory.xyz[:, :2]
    k = min(4, len(poses))
    d, idx = NeighborIndex(poses).nearest_k(centers, k) if k > 1 else (None, None)
    if k == 1:
        return np.zeros(spec.shape, dtype=np.int64)
    tie = d <= d[:, :1]
    best = np.where(tie, idx, np.iinfo(np.int64).max).min(axis=1)
    return best.reshape(spec.shape)


def traversable_mask(index_map: IndexMap, pose_index: np.ndarray, t_traj: np.ndarray,
                     cfg: TraversabilityConfig) -> tuple[np.ndarray, np.ndarray]:
    """Raw per-cell decision: ``(passes, measured)`` before any OR or closure."""
    avg = index_map.average
    measured = index_map.count > 0
    ref = t_traj[pose_index]
    with np.errstate(invalid="ignore"):
        passes = measured & (avg >= cfg.gamma * ref) & (avg >= cfg.t_min)
    return passes, measured


def threshold_traversability(index_map: IndexMap, trajectory: Trajectory, t_traj: np.ndarray,
                             cfg: TraversabilityConfig, traj_layer: BinaryLayer | None = None):
    """Returns ``(M_trav, untraversable)``.

    ``untraversable`` marks measured cells failing the threshold, before the
    trajectory OR and the closure.
    """
    spec = index_map.spec
    pose_index = nearest_pose(spec, trajectory)
    passes, measured = traversable_mask(index_map, pose_index, np.asarray(t_traj, float), cfg)
    layer = passes.copy()
    if traj_layer is not None:
        spec.check_same(traj_layer.spec)
        layer |= traj_layer.data
    closed = morph_close(BinaryLayer(spec, layer, "traversable"), cfg.closure_radius)
    return closed, BinaryLayer(spec, measured & ~passes, "untraversable")
