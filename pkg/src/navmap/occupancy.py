"""Log-odds 3D occupancy mapping.

The map is a linear octree: leaves live in a Morton-ordered key array, so any
subtree is a contiguous key range and coarser levels are obtained by dropping
the low 3*level bits of the key. Ray traversal uses the Amanatides-Woo 3D DDA,
vectorised over all rays of a scan.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import GridSpec, MultiElevationMap


def logit(p: float) -> float:
    return float(np.log(p / (1.0 - p)))


@dataclass(frozen=True)
class SensorModel:
    p_hit: float = 0.7
    p_miss: float = 0.4
    clamp_min: float = 0.12
    clamp_max: float = 0.97
    max_range: float = 20.0

    def __post_init__(self):
        for name in ("p_hit", "p_miss", "clamp_min", "clamp_max"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")
        if not self.clamp_min < self.clamp_max:
            raise ValueError("clamp_min must be below clamp_max")

    @property
    def l_hit(self):
        return logit(self.p_hit)

    @property
    def l_miss(self):
        return logit(self.p_miss)

    @property
    def l_min(self):
        return logit(self.clamp_min)

    @property
    def l_max(self):
        return logit(self.clamp_max)


def traverse_voxels(starts, ends, voxel_size: float):
    """All voxels visited by each segment, from its start voxel to its end voxel.

    Returns ``(ray, ijk)``: ray index and integer voxel index per visited voxel,
    grouped by ray and in traversal order. Each segment visits exactly
    ``|di| + |dj| + |dk| + 1`` voxels, so it always terminates in the voxel
    containing its end point.
    """
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    ends = np.atleast_2d(np.asarray(ends, dtype=float))
    if starts.shape[0] == 1 and ends.shape[0] > 1:
        starts = np.broadcast_to(starts, ends.shape)
    n = ends.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64), np.zeros((0, 3), dtype=np.int64)

    v = voxel_size
    cur = np.floor(starts / v).astype(np.int64)
    last = np.floor(ends / v).astype(np.int64)
    d = ends - starts
    step = np.sign(last - cur).astype(np.int64)
    remaining = np.abs(last - cur)
    nsteps = remaining.sum(axis=1)

    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(d != 0, 1.0 / np.abs(d), np.inf)
        boundary = (cur + (step > 0)) * v
        t_max = np.where(step != 0, np.abs(boundary - starts) * inv, np.inf)
        t_delta = v * inv
    t_max[remaining == 0] = np.inf

    # longest rays first, so the active set is always a prefix
    order = np.argsort(-nsteps, kind="stable")
    cur, remaining, step = cur[order], remaining[order], step[order]
    t_max, t_delta, nsteps = t_max[order], t_delta[order], nsteps[order]

    offsets = np.concatenate([[0], np.cumsum(nsteps + 1)])
    total = int(offsets[-1])
    out = np.empty((total, 3), dtype=np.int64)
    out[offsets[:-1]] = cur
    rows = np.arange(n)
    active_counts = np.searchsorted(-nsteps, -np.arange(1, int(nsteps[0]) + 1), side="right") \
        if n and nsteps[0] > 0 else np.zeros(0, dtype=np.int64)
    for s, m in enumerate(active_counts, start=1):
        r = rows[:m]
        tm = t_max[:m]
        axis = np.argmin(tm, axis=1)
        cur[r, axis] += step[r, axis]
        remaining[r, axis] -= 1
        tm[r, axis] = np.where(remaining[r, axis] > 0, tm[r, axis] + t_delta[r, axis], np.inf)
        out[offsets[:m] + s] = cur[:m]

    ray_sorted = np.repeat(np.arange(n), nsteps + 1)
    return order[ray_sorted], out


# Morton keys: 16 bits per axis, voxel indices offset into [0, 65536).
_KEY_BITS = 16
_KEY_OFFSET = 1 << (_KEY_BITS - 1)


def _spread_bits(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.uint64) & np.uint64(0xFFFF)
    x = (x | (x << np.uint64(16))) & np.uint64(0x0000FF0000FF)
    x = (x | (x << np.uint64(8))) & np.uint64(0x00F00F00F00F)
    x = (x | (x << np.uint64(4))) & np.uint64(0x0C30C30C30C3)
    x = (x | (x << np.uint64(2))) & np.uint64(0x249249249249)
    return x


def _compact_bits(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.uint64) & np.uint64(0x249249249249)
    x = (x | (x >> np.uint64(2))) & np.uint64(0x0C30C30C30C3)
    x = (x | (x >> np.uint64(4))) & np.uint64(0x00F00F00F00F)
    x = (x | (x >> np.uint64(8))) & np.uint64(0x0000FF0000FF)
    x = (x | (x >> np.uint64(16))) & np.uint64(0xFFFF)
    return x.astype(np.int64)


def morton_encode(ijk: np.ndarray) -> np.ndarray:
    ijk = np.asarray(ijk, dtype=np.int64).reshape(-1, 3) + _KEY_OFFSET
    if np.any(ijk < 0) or np.any(ijk >= (1 << _KEY_BITS)):
        raise ValueError("voxel index outside the addressable octree volume")
    key = _spread_bits(ijk[:, 0]) | (_spread_bits(ijk[:, 1]) << np.uint64(1)) \
        | (_spread_bits(ijk[:, 2]) << np.uint64(2))
    return key.astype(np.int64)


def morton_decode(keys: np.ndarray) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.int64).astype(np.uint64)
    ijk = np.column_stack([
        _compact_bits(keys),
        _compact_bits(keys >> np.uint64(1)),
        _compact_bits(keys >> np.uint64(2)),
    ])
    return ijk - _KEY_OFFSET


def scan_updates(origin, points, voxel_size: float, max_range: float):
    """Per-scan voxel sets ``(hits, misses)`` as (N, 3) index arrays.

    Each voxel appears at most once and hit wins over miss. Returns also the
    number of degenerate rays (point at the origin), which are skipped.
    """
    origin = np.asarray(origin, dtype=float).reshape(3)
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    d = points - origin
    dist = np.linalg.norm(d, axis=1)
    degenerate = dist <= 1e-12
    points, d, dist = points[~degenerate], d[~degenerate], dist[~degenerate]

    hit_vox = np.floor(points / voxel_size).astype(np.int64)
    truncated = dist > max_range
    carve_end = points.copy()
    carve_end[truncated] = origin + d[truncated] * (max_range / dist[truncated, None])

    ray, vox = traverse_voxels(origin, carve_end, voxel_size)
    # untruncated rays end in their hit voxel, which is not a miss
    keep = np.ones(len(ray), dtype=bool)
    if len(ray):
        last_of_ray = np.r_[ray[1:] != ray[:-1], True]
        keep &= ~(last_of_ray & ~truncated[ray])
    hit_keys = np.unique(morton_encode(hit_vox))
    miss_keys = np.unique(morton_encode(vox[keep]))
    miss_keys = miss_keys[~np.isin(miss_keys, hit_keys, assume_unique=True)]
    return hit_keys, miss_keys, int(degenerate.sum())


class OccupancyOctree:
    """Clamped log-odds occupancy map stored as a Morton-ordered linear octree."""

    def __init__(self, voxel_size: float = 0.1, model: SensorModel | None = None):
        if not voxel_size > 0:
            raise ValueError("voxel_size must be positive")
        self.voxel_size = float(voxel_size)
        self.model = model or SensorModel()
        self.keys = np.zeros(0, dtype=np.int64)
        self.logodds = np.zeros(0, dtype=float)
        self.degenerate_rays = 0
        self.scans = 0

    def __len__(self):
        return len(self.keys)

    def integrate_scan(self, origin, points):
        """Apply one scan's inverse-sensor-model update; must run in recording order."""
        m = self.model
        hit_keys, miss_keys, ndeg = scan_updates(origin, points, self.voxel_size, m.max_range)
        self.degenerate_rays += ndeg
        self.scans += 1
        upd_keys = np.concatenate([hit_keys, miss_keys])
        upd = np.concatenate([np.full(len(hit_keys), m.l_hit), np.full(len(miss_keys), m.l_miss)])
        order = np.argsort(upd_keys, kind="stable")
        upd_keys, upd = upd_keys[order], upd[order]

        pos = np.searchsorted(self.keys, upd_keys)
        pos_c = np.minimum(pos, max(len(self.keys) - 1, 0))
        exists = (pos < len(self.keys)) & (self.keys[pos_c] == upd_keys) if len(self.keys) else \
            np.zeros(len(upd_keys), dtype=bool)
        idx = pos[exists]
        self.logodds[idx] = np.clip(self.logodds[idx] + upd[exists], m.l_min, m.l_max)
        new = ~exists
        if new.any():
            new_vals = np.clip(upd[new], m.l_min, m.l_max)
            self.keys = np.insert(self.keys, pos[new], upd_keys[new])
            self.logodds = np.insert(self.logodds, pos[new], new_vals)
        return self

    def voxels(self) -> np.ndarray:
        return morton_decode(self.keys)

    def probability(self) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-self.logodds))

    def logodds_at(self, ijk) -> np.ndarray:
        """Log-odds of the given voxels; unknown voxels read 0 (o = 0.5)."""
        keys = morton_encode(ijk)
        pos = np.searchsorted(self.keys, keys)
        out = np.zeros(len(keys))
        if len(self.keys):
            pos_c = np.minimum(pos, len(self.keys) - 1)
            found = self.keys[pos_c] == keys
            out[found] = self.logodds[pos_c[found]]
        return out

    def occupied(self, threshold: float) -> np.ndarray:
        """Voxel indices with occupancy above ``threshold``, lexicographically ordered."""
        if not 0.0 < threshold < 1.0:
            raise ValueError("threshold must lie in (0, 1)")
        sel = self.logodds > logit(threshold)
        ijk = morton_decode(self.keys[sel])
        if len(ijk) == 0:
            return ijk
        return ijk[np.lexsort((ijk[:, 2], ijk[:, 1], ijk[:, 0]))]

    def level_max(self, level: int) -> tuple[np.ndarray, np.ndarray]:
        """Inner nodes ``level`` steps above the leaves with the max child log-odds.

        Returns node indices (voxel index // 2**level) and values.
        """
        if level == 0:
            return self.voxels(), self.logodds.copy()
        parents = self.keys >> np.int64(3 * level)
        starts = np.r_[0, np.flatnonzero(np.diff(parents)) + 1] if len(parents) else np.zeros(0, int)
        vals = np.maximum.reduceat(self.logodds, starts) if len(starts) else np.zeros(0)
        node_keys = parents[starts] if len(starts) else parents
        # decode against a shifted offset: parents share the leaf key layout
        ijk = morton_decode(node_keys) + _KEY_OFFSET
        return ijk - (_KEY_OFFSET >> level), vals


class DenseOccupancyGrid:
    """Dense-array occupancy map over a bounded box; reference for the octree."""

    def __init__(self, lo, shape, voxel_size: float = 0.1, model: SensorModel | None = None):
        self.lo = np.asarray(lo, dtype=np.int64)
        self.voxel_size = float(voxel_size)
        self.model = model or SensorModel()
        self.grid = np.zeros(tuple(shape))
        self.known = np.zeros(tuple(shape), dtype=bool)

    def integrate_scan(self, origin, points):
        m = self.model
        hit_keys, miss_keys, _ = scan_updates(origin, points, self.voxel_size, m.max_range)
        for keys, delta in ((hit_keys, m.l_hit), (miss_keys, m.l_miss)):
            idx = morton_decode(keys) - self.lo
            if np.any(idx < 0) or np.any(idx >= np.array(self.grid.shape)):
                raise IndexError("update outside the dense grid")
            ii, jj, kk = idx.T
            self.grid[ii, jj, kk] = np.clip(self.grid[ii, jj, kk] + delta, m.l_min, m.l_max)
            self.known[ii, jj, kk] = True
        return self

    def occupied(self, threshold: float) -> np.ndarray:
        idx = np.argwhere(self.known & (self.grid > logit(threshold)))
        return idx + self.lo


def voxel_centers(ijk: np.ndarray, voxel_size: float) -> np.ndarray:
    return (np.asarray(ijk, dtype=float) + 0.5) * voxel_size


def occupied_centroids(tree: OccupancyOctree, threshold: float) -> np.ndarray:
    """Centers of voxels with o > threshold, ordered by voxel index."""
    return voxel_centers(tree.occupied(threshold), tree.voxel_size)


def to_multi_elevation(tree: OccupancyOctree, spec: GridSpec, threshold: float) -> MultiElevationMap:
    return MultiElevationMap.from_points(spec, occupied_centroids(tree, threshold))
