"""Multi-channel spinning LiDAR model and analytic raycasting against a scene."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import PointCloud, Pose
from .scene import SceneSpec, Terrain

_BISECT_ITERS = 48
_CHUNK = 32


@dataclass(frozen=True)
class LidarModel:
    channels: int = 16
    vfov_deg: float = 30.0
    h_res_deg: float = 0.4
    mount_height: float = 0.5
    range_noise: float = 0.01
    max_range: float = 30.0

    def __post_init__(self):
        if self.channels < 1 or not self.h_res_deg > 0 or not self.max_range > 0:
            raise ValueError("invalid lidar parameters")
        if self.range_noise < 0:
            raise ValueError("range noise must be >= 0")

    def elevations(self) -> np.ndarray:
        """Channel elevation angles in radians, evenly spaced, ring 0 lowest."""
        half = np.radians(self.vfov_deg / 2)
        if self.channels == 1:
            return np.zeros(1)
        return np.linspace(-half, half, self.channels)

    def azimuths(self) -> np.ndarray:
        n = int(round(360.0 / self.h_res_deg))
        return np.radians(np.arange(n) * self.h_res_deg)

    def directions(self) -> tuple[np.ndarray, np.ndarray]:
        """Unit ray directions in the sensor frame, firing order (azimuth-major)."""
        el = self.elevations()
        az = self.azimuths()
        A, E = np.meshgrid(az, el, indexing="ij")
        d = np.stack([np.cos(E) * np.cos(A), np.cos(E) * np.sin(A), np.sin(E)], axis=-1)
        ring = np.broadcast_to(np.arange(len(el)), A.shape)
        return d.reshape(-1, 3), ring.reshape(-1).copy()


def _terrain_hits(terr: Terrain, o: np.ndarray, d: np.ndarray, t_max: float) -> np.ndarray:
    """First crossing of each ray below the heightfield, inf if none."""
    n = len(d)
    t_hit = np.full(n, np.inf)
    dz = d[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        ta = (terr.zmax - o[2]) / dz
        tb = (terr.zmin - o[2]) / dz
    t_in = np.where(dz < 0, ta, np.where(dz > 0, tb, 0.0))
    t_out = np.where(dz < 0, tb, np.where(dz > 0, ta, np.inf))
    if dz.size and not (terr.zmin <= o[2] <= terr.zmax):
        t_out = np.where(dz == 0, -np.inf, t_out)
    t_in = np.maximum(np.nan_to_num(t_in, nan=0.0), 0.0)
    t_out = np.minimum(t_out, t_max)

    # clip to the lattice bounding box in xy
    h = terr.spacing
    lo = np.array([terr.a0 * h, terr.b0 * h])
    hi = lo + (np.array(terr.nodes.shape) - 1) * h
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (lo - o[:2]) / d[:, :2]
        t2 = (hi - o[:2]) / d[:, :2]
    t_far = np.nanmin(np.where(np.isnan(t1), np.inf, np.maximum(t1, t2)), axis=1)
    t_out = np.minimum(t_out, t_far)

    speed = np.maximum(np.hypot(d[:, 0], d[:, 1]), 0.25)
    dt = 0.5 * h / speed
    f0 = _residual(terr, o, d, t_in)
    start_under = f0 <= 0
    t_hit[start_under & (t_in <= t_out)] = t_in[start_under & (t_in <= t_out)]

    active = np.flatnonzero(~start_under & (t_in < t_out))
    t0 = t_in.copy()
    steps = np.arange(1, _CHUNK + 1)
    while active.size:
        ts = np.minimum(t0[active, None] + dt[active, None] * steps, t_out[active, None])
        f = _residual(terr, o, d[active, None, :], ts)
        under = f <= 0
        hit = under.any(axis=1)
        if hit.any():
            rows = np.flatnonzero(hit)
            k = np.argmax(under[rows], axis=1)
            hi_t = ts[rows, k]
            lo_t = np.where(k > 0, ts[rows, np.maximum(k - 1, 0)], t0[active[rows]])
            t_hit[active[rows]] = _bisect(terr, o, d[active[rows]], lo_t, hi_t)
        t0[active] = ts[:, -1]
        active = active[~hit & (ts[:, -1] < t_out[active])]
    return t_hit


def _residual(terr: Terrain, o, d, t):
    p = o + t[..., None] * d
    f = p[..., 2] - terr.height(p[..., 0], p[..., 1])
    return np.where(np.isnan(f), np.inf, f)


def _bisect(terr, o, d, lo, hi):
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        under = _residual(terr, o, d, mid) <= 0
        hi = np.where(under, mid, hi)
        lo = np.where(under, lo, mid)
    return hi


def _box_hits(boxes: np.ndarray, o, d) -> np.ndarray:
    """Entry distance into solids extruded downward from each box top."""
    t_hit = np.full(len(d), np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d
        for x0, y0, x1, y1, top in boxes:
            t1 = (np.array([x0, y0, -1e6]) - o) * inv
            t2 = (np.array([x1, y1, top]) - o) * inv
            tn = np.minimum(t1, t2).max(axis=1)
            tf = np.maximum(t1, t2).min(axis=1)
            ok = (tn <= tf) & (tn > 0)
            t_hit = np.where(ok & (tn < t_hit), tn, t_hit)
    return t_hit


def _cylinder_hits(cylinders: np.ndarray, o, d) -> np.ndarray:
    t_hit = np.full(len(d), np.inf)
    a = d[:, 0] ** 2 + d[:, 1] ** 2
    for cx, cy, r, top in cylinders:
        ox, oy = o[0] - cx, o[1] - cy
        b = 2 * (ox * d[:, 0] + oy * d[:, 1])
        c = ox * ox + oy * oy - r * r
        disc = b * b - 4 * a * c
        with np.errstate(divide="ignore", invalid="ignore"):
            ts = (-b - np.sqrt(np.maximum(disc, 0))) / (2 * a)
            side = (disc >= 0) & (ts > 0) & (o[2] + ts * d[:, 2] <= top)
            tc = (top - o[2]) / d[:, 2]
        px, py = ox + tc * d[:, 0], oy + tc * d[:, 1]
        cap = (d[:, 2] < 0) & (tc > 0) & (px * px + py * py <= r * r)
        t = np.minimum(np.where(side, ts, np.inf), np.where(cap, tc, np.inf))
        t_hit = np.minimum(t_hit, t)
    return t_hit


def raycast_scan(scene: SceneSpec | Terrain, pose: Pose, lidar: LidarModel, seed) -> PointCloud:
    """One sweep from ``pose``; returns sensor-frame hits tagged with ring ids.

    Rays without a surface within max range produce no point. ``seed`` feeds
    the range noise generator and may be an int or a sequence of ints.
    """
    terr = scene if isinstance(scene, Terrain) else Terrain(scene)
    d_s, ring = lidar.directions()
    rot = pose.matrix()
    d = d_s @ rot.T
    o = pose.translation
    t = _terrain_hits(terr, o, d, lidar.max_range)
    if len(terr.boxes):
        t = np.minimum(t, _box_hits(terr.boxes, o, d))
    if len(terr.cylinders):
        t = np.minimum(t, _cylinder_hits(terr.cylinders, o, d))
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(len(d)) * lidar.range_noise
    keep = t <= lidar.max_range
    rng_m = t[keep] + noise[keep]
    return PointCloud(rng_m[:, None] * d_s[keep], ring[keep], "sensor")
