"""Dataset generation along a path and analytic ground-truth rasterization."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from ..core import BinaryLayer, GridSpec, Pose, Trajectory
from ..scan_io import Dataset, LidarInfo, ensure_dir, write_dataset, write_pgm
from .lidar import LidarModel, raycast_scan
from .scene import SceneSpec, Terrain, points_in_polygon

TRUTH_LAYERS = ("explored", "positive", "negative", "traversable", "fused")


class PathOutsideScene(ValueError):
    pass


@dataclass
class GroundTruth:
    spec: GridSpec
    layers: dict
    obstacle: np.ndarray
    step: np.ndarray
    rough: np.ndarray
    reachable: np.ndarray

    def __getitem__(self, name: str) -> BinaryLayer:
        return self.layers[name]


def sample_path(path, spacing: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Points every ``spacing`` meters of arc length with tangent yaw and arc length."""
    path = np.asarray(path, dtype=float).reshape(-1, 2)
    if len(path) < 2 or not spacing > 0:
        raise ValueError("path needs >= 2 vertices and spacing must be positive")
    seg = np.diff(path, axis=0)
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    if np.any(seg_len == 0):
        raise ValueError("path has a zero-length segment")
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    n = int(np.floor(cum[-1] / spacing + 1e-9)) + 1
    s = np.arange(n) * spacing
    k = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
    frac = (s - cum[k]) / seg_len[k]
    xy = path[k] + frac[:, None] * seg[k]
    yaw = np.arctan2(seg[k, 1], seg[k, 0])
    return xy, yaw, s


def check_path(scene: SceneSpec, path, step: float = 0.05):
    xy, _, _ = sample_path(path, step)
    xy = np.vstack([xy, np.asarray(path, float)[-1]])
    labels = scene.label_at(xy)
    bad = labels != "smooth"
    for b in scene.boxes:
        bad |= (xy[:, 0] >= b.xmin) & (xy[:, 0] <= b.xmax) & (xy[:, 1] >= b.ymin) & (xy[:, 1] <= b.ymax)
    for c in scene.cylinders:
        bad |= np.hypot(xy[:, 0] - c.cx, xy[:, 1] - c.cy) <= c.radius
    if bad.any():
        x, y = xy[np.argmax(bad)]
        raise PathOutsideScene(f"path leaves smooth free terrain near ({x:.2f}, {y:.2f})")


def scene_grid(scene: SceneSpec, resolution: float) -> GridSpec:
    xmin, ymin, xmax, ymax = scene.bounds()
    ox = np.floor(xmin / resolution + 1e-9) * resolution
    oy = np.floor(ymin / resolution + 1e-9) * resolution
    w = int(np.ceil((xmax - ox) / resolution - 1e-9))
    h = int(np.ceil((ymax - oy) / resolution - 1e-9))
    return GridSpec(resolution, (round(ox, 9), round(oy, 9)), w, h)


def _segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    s = np.clip(((p - a) @ ab) / (ab @ ab), 0.0, 1.0)
    return np.hypot(*(p - a - s[:, None] * ab).T)


def ground_truth(scene: SceneSpec, pose_xy: np.ndarray, spec: GridSpec) -> GroundTruth:
    """Per-layer truth from the scene description (True = traversable / explored)."""
    X, Y = spec.cell_centers()
    c = np.column_stack([X.ravel(), Y.ravel()])
    l = spec.resolution
    shape = spec.shape

    obstacle = np.zeros(len(c), dtype=bool)
    for b in scene.boxes:
        # open overlap of the footprint with the cell square
        obstacle |= ((np.abs(c[:, 0] - (b.xmin + b.xmax) / 2) < (b.xmax - b.xmin + l) / 2)
                     & (np.abs(c[:, 1] - (b.ymin + b.ymax) / 2) < (b.ymax - b.ymin + l) / 2))
    for cyl in scene.cylinders:
        dx = np.maximum(np.abs(c[:, 0] - cyl.cx) - l / 2, 0)
        dy = np.maximum(np.abs(c[:, 1] - cyl.cy) - l / 2, 0)
        obstacle |= np.hypot(dx, dy) < cyl.radius

    step = np.zeros(len(c), dtype=bool)
    for st in scene.steps:
        pl = np.asarray(st.polyline, dtype=float)
        for a, b in zip(pl[:-1], pl[1:]):
            step |= _segment_distance(c, a, b) <= l / np.sqrt(2) + 1e-9

    z = scene.base_height(c)
    on_terrain = np.isfinite(z)
    rough = scene.label_at(c) == "rough"
    for ramp in scene.ramps:
        rough &= ~points_in_polygon(c, ramp.polygon)

    # reachability: 4-connected moves over terrain, no obstacle, bounded height jump
    ok = (on_terrain & ~obstacle).reshape(shape)
    zz = np.where(np.isfinite(z), z, 0.0).reshape(shape)
    idx = np.arange(len(c)).reshape(shape)
    rows, cols = [], []
    for sl_a, sl_b in (((slice(None, -1), slice(None)), (slice(1, None), slice(None))),
                       ((slice(None), slice(None, -1)), (slice(None), slice(1, None)))):
        e = ok[sl_a] & ok[sl_b] & (np.abs(zz[sl_a] - zz[sl_b]) <= scene.max_step)
        rows.append(idx[sl_a][e])
        cols.append(idx[sl_b][e])
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(c), len(c)))
    _, labels = connected_components(graph, directed=False)
    ij, inside = spec.cells_of(np.asarray(pose_xy, float))
    seeds = idx[ij[inside, 0], ij[inside, 1]]
    reach = np.isin(labels, labels[seeds]) & ok.ravel()
    near = cKDTree(np.asarray(pose_xy, float)).query(c, distance_upper_bound=scene.sense_range)[0]
    explored = reach & np.isfinite(near)

    as_layer = lambda m, name: BinaryLayer(spec, m.reshape(shape), name)
    layers = {
        "explored": as_layer(explored, "explored"),
        "positive": as_layer(~obstacle, "positive"),
        "negative": as_layer(~step, "negative"),
        "traversable": as_layer(~rough, "traversable"),
    }
    layers["fused"] = as_layer(explored & ~obstacle & ~step & ~rough, "fused")
    return GroundTruth(spec, layers, obstacle.reshape(shape), step.reshape(shape),
                       rough.reshape(shape), reach.reshape(shape))


def generate_dataset(scene: SceneSpec, path, lidar: LidarModel | None = None, spacing: float = 0.25,
                     seed: int = 0, out_dir=None, resolution: float = 0.1):
    """Scan the scene along ``path``; optionally write dataset and truth to ``out_dir``.

    Returns ``(Dataset, GroundTruth)``. The sensor stays level (yaw only).
    """
    lidar = lidar or LidarModel()
    check_path(scene, path)
    terr = Terrain(scene)
    xy, yaw, s = sample_path(path, spacing)
    ground = terr.height(xy[:, 0], xy[:, 1])
    poses = [Pose.from_xyz_yaw((x, y, g + lidar.mount_height), a) for (x, y), g, a in zip(xy, ground, yaw)]
    scans = [raycast_scan(terr, p, lidar, [seed, k]) for k, p in enumerate(poses)]
    # round-trip precision of the on-disk format
    for sc in scans:
        sc.xyz = np.round(sc.xyz, 6)
    spec = scene_grid(scene, resolution)
    meta = {
        "scene": scene.name,
        "channels": lidar.channels,
        "vfov_deg": lidar.vfov_deg,
        "mount_height": lidar.mount_height,
        "resolution": spec.resolution,
        "grid_origin_x": spec.origin[0],
        "grid_origin_y": spec.origin[1],
        "grid_width": spec.width,
        "grid_height": spec.height,
        "seed": seed,
    }
    dataset = Dataset(Trajectory(s, poses), scans, lidar.mount_height,
                      LidarInfo(lidar.channels, lidar.vfov_deg), meta)
    truth = ground_truth(scene, xy, spec)
    if out_dir is not None:
        out = ensure_dir(out_dir)
        write_dataset(out, dataset)
        tdir = ensure_dir(Path(out) / "truth")
        for name in TRUTH_LAYERS:
            write_pgm(tdir / f"{name}.pgm", truth.layers[name], name)
    return dataset, truth
