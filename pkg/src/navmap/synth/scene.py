"""Scene description and the compiled terrain heightfield used by the raycaster."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass
class TerrainRegion:
    polygon: list
    elevation: float
    roughness: float = 0.0
    label: str = "smooth"
    name: str = ""

    def __post_init__(self):
        if self.roughness < 0:
            raise ValueError("roughness amplitude must be >= 0")
        if self.label not in ("smooth", "rough"):
            raise ValueError("terrain label must be 'smooth' or 'rough'")


@dataclass
class Ramp:
    """Planar incline over ``polygon`` rising linearly from ``p0`` (z0) to ``p1`` (z1)."""

    polygon: list
    p0: tuple
    p1: tuple
    z0: float
    z1: float
    name: str = ""

    @property
    def slope_deg(self) -> float:
        run = np.hypot(self.p1[0] - self.p0[0], self.p1[1] - self.p0[1])
        return float(np.degrees(np.arctan2(abs(self.z1 - self.z0), run)))

    def height(self, xy: np.ndarray) -> np.ndarray:
        p0, p1 = np.asarray(self.p0, float), np.asarray(self.p1, float)
        axis = p1 - p0
        s = np.clip(((xy - p0) @ axis) / (axis @ axis), 0.0, 1.0)
        return self.z0 + s * (self.z1 - self.z0)


@dataclass
class Step:
    """Ground-truth annotation of a drop edge along a polyline."""

    polyline: list
    drop: float
    name: str = ""

    def __post_init__(self):
        if not self.drop > 0:
            raise ValueError("step drop must be positive")


@dataclass
class Box:
    xmin: float
    ymin: float
    xmax: float
    ymax: float
    height: float
    name: str = ""


@dataclass
class Cylinder:
    cx: float
    cy: float
    radius: float
    height: float
    name: str = ""


@dataclass
class SceneSpec:
    name: str
    regions: list = field(default_factory=list)
    ramps: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    boxes: list = field(default_factory=list)
    cylinders: list = field(default_factory=list)
    roughness_seed: int = 0
    node_spacing: float = 0.05
    sense_range: float = 8.0
    max_step: float = 0.05
    # evaluation window (xmin, ymin, xmax, ymax); terrain may extend past it
    extent: tuple | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SceneSpec":
        d = dict(d)
        d["regions"] = [TerrainRegion(**r) for r in d.get("regions", [])]
        d["ramps"] = [Ramp(**r) for r in d.get("ramps", [])]
        d["steps"] = [Step(**s) for s in d.get("steps", [])]
        d["boxes"] = [Box(**b) for b in d.get("boxes", [])]
        d["cylinders"] = [Cylinder(**c) for c in d.get("cylinders", [])]
        if d.get("extent") is not None:
            d["extent"] = tuple(float(v) for v in d["extent"])
        return cls(**d)

    def bounds(self) -> tuple[float, float, float, float]:
        """The evaluation window: ``extent`` if set, else the terrain bounding box."""
        if self.extent is not None:
            x0, y0, x1, y1 = (float(v) for v in self.extent)
            if not (x1 > x0 and y1 > y0):
                raise ValueError("extent must be (xmin, ymin, xmax, ymax) with positive size")
            return x0, y0, x1, y1
        return self.terrain_bounds()

    def terrain_bounds(self) -> tuple[float, float, float, float]:
        pts = np.vstack([np.asarray(r.polygon, float) for r in self.regions])
        return float(pts[:, 0].min()), float(pts[:, 1].min()), float(pts[:, 0].max()), float(pts[:, 1].max())

    def box_base(self, box: Box) -> float:
        return self._base_or_zero((box.xmin + box.xmax) / 2, (box.ymin + box.ymax) / 2)

    def cylinder_base(self, cyl: Cylinder) -> float:
        return self._base_or_zero(cyl.cx, cyl.cy)

    def _base_or_zero(self, x: float, y: float) -> float:
        z = float(self.base_height(np.array([[x, y]]))[0])
        return z if np.isfinite(z) else 0.0

    def region_index(self, xy: np.ndarray) -> np.ndarray:
        """Index of the topmost region containing each point, -1 outside the terrain."""
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        idx = np.full(len(xy), -1)
        for k, region in enumerate(self.regions):
            idx[points_in_polygon(xy, region.polygon)] = k
        return idx

    def base_height(self, xy: np.ndarray) -> np.ndarray:
        """Noise-free terrain height (regions then ramps); NaN outside the terrain."""
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        idx = self.region_index(xy)
        elev = np.array([r.elevation for r in self.regions] + [np.nan])
        z = elev[idx]
        for ramp in self.ramps:
            inside = points_in_polygon(xy, ramp.polygon) & (idx >= 0)
            z[inside] = ramp.height(xy[inside])
        return z

    def roughness_at(self, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        idx = self.region_index(xy)
        amp = np.array([r.roughness for r in self.regions] + [0.0])[idx]
        for ramp in self.ramps:
            amp[points_in_polygon(xy, ramp.polygon)] = 0.0
        return amp

    def label_at(self, xy: np.ndarray) -> np.ndarray:
        idx = self.region_index(xy)
        labels = np.array([r.label for r in self.regions] + ["none"])
        return labels[idx]


def points_in_polygon(xy: np.ndarray, polygon) -> np.ndarray:
    """Even-odd rule point-in-polygon, vectorised over points."""
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    poly = np.asarray(polygon, dtype=float)
    x, y = xy[:, 0], xy[:, 1]
    inside = np.zeros(len(xy), dtype=bool)
    xj, yj = poly[-1]
    for xi, yi in poly:
        crosses = (yi > y) != (yj > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_at = (xj - xi) * (y - yi) / (yj - yi) + xi
        inside ^= crosses & (x < x_at)
        xj, yj = xi, yi
    return inside


def hash_uniform(a: np.ndarray, b: np.ndarray, seed: int) -> np.ndarray:
    """Deterministic uniform values in [-1, 1) from integer lattice coordinates."""
    with np.errstate(over="ignore"):
        h = (a.astype(np.int64).astype(np.uint64) * np.uint64(0x9E3779B97F4A7C15)) ^ \
            (b.astype(np.int64).astype(np.uint64) * np.uint64(0xC2B2AE3D27D4EB4F)) ^ \
            np.uint64(seed & 0xFFFFFFFFFFFFFFFF) * np.uint64(0x165667B19E3779F9)
        # splitmix64 finaliser
        h ^= h >> np.uint64(30)
        h *= np.uint64(0xBF58476D1CE4E5B9)
        h ^= h >> np.uint64(27)
        h *= np.uint64(0x94D049BB133111EB)
        h ^= h >> np.uint64(31)
    return (h >> np.uint64(11)).astype(np.float64) / float(1 << 53) * 2.0 - 1.0


class Terrain:
    """Bilinear heightfield sampled on a world-aligned lattice, plus solid obstacles."""

    def __init__(self, scene: SceneSpec):
        self.scene = scene
        h = scene.node_spacing
        xmin, ymin, xmax, ymax = scene.terrain_bounds()
        self.a0 = int(np.floor(xmin / h)) - 1
        self.b0 = int(np.floor(ymin / h)) - 1
        a1 = int(np.ceil(xmax / h)) + 1
        b1 = int(np.ceil(ymax / h)) + 1
        a = np.arange(self.a0, a1 + 1)
        b = np.arange(self.b0, b1 + 1)
        A, B = np.meshgrid(a, b, indexing="ij")
        xy = np.column_stack([A.ravel() * h, B.ravel() * h])
        z = scene.base_height(xy)
        amp = scene.roughness_at(xy)
        z = z + amp * hash_uniform(A.ravel(), B.ravel(), scene.roughness_seed)
        self.nodes = z.reshape(A.shape)
        self.spacing = h
        finite = self.nodes[np.isfinite(self.nodes)]
        self.zmin, self.zmax = float(finite.min()), float(finite.max())
        self.boxes = np.array([[bx.xmin, bx.ymin, bx.xmax, bx.ymax, scene.box_base(bx) + bx.height]
                               for bx in scene.boxes]).reshape(-1, 5)
        self.cylinders = np.array([[c.cx, c.cy, c.radius, scene.cylinder_base(c) + c.height]
                                   for c in scene.cylinders]).reshape(-1, 4)

    def height(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Bilinear terrain height; NaN outside the terrain."""
        h = self.spacing
        fx = x / h - self.a0
        fy = y / h - self.b0
        ia = np.floor(fx).astype(np.int64)
        ib = np.floor(fy).astype(np.int64)
        na, nb = self.nodes.shape
        ok = (ia >= 0) & (ia < na - 1) & (ib >= 0) & (ib < nb - 1)
        ia = np.where(ok, ia, 0)
        ib = np.where(ok, ib, 0)
        u = fx - ia
        v = fy - ib
        n = self.nodes
        z = (n[ia, ib] * (1 - u) * (1 - v) + n[ia + 1, ib] * u * (1 - v)
             + n[ia, ib + 1] * (1 - u) * v + n[ia + 1, ib + 1] * u * v)
        return np.where(ok, z, np.nan)

    def surface_residual(self, xyz: np.ndarray) -> np.ndarray:
        """Unsigned distance-like residual of points to the nearest scene surface."""
        xyz = np.asarray(xyz, dtype=float).reshape(-1, 3)
        res = np.abs(xyz[:, 2] - self.height(xyz[:, 0], xyz[:, 1]))
        res = np.where(np.isnan(res), np.inf, res)
        x, y, z = xyz.T
        for x0, y0, x1, y1, top in self.boxes:
            q = np.column_stack([np.maximum(x0 - x, x - x1), np.maximum(y0 - y, y - y1), z - top])
            res = np.minimum(res, np.abs(_sdf(q)))
        for cx, cy, r, top in self.cylinders:
            q = np.column_stack([np.hypot(x - cx, y - cy) - r, z - top])
            res = np.minimum(res, np.abs(_sdf(q)))
        return res


def _sdf(q: np.ndarray) -> np.ndarray:
    """Signed distance from per-axis slab excesses (solid extruded downward)."""
    outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
    inside = np.minimum(q.max(axis=1), 0.0)
    return outside + inside
