"""Grid and point-cloud primitives shared by every mapping stage.

Layers are stored as ``(width, height)`` arrays indexed ``[i, j]`` where ``i``
runs along world x and ``j`` along world y. Cell ``(i, j)`` covers the
half-open square ``[x0 + i*l, x0 + (i+1)*l) x [y0 + j*l, y0 + (j+1)*l)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial.transform import Rotation


class GridSpecMismatch(ValueError):
    """Raised when two grids that must be aligned are not."""


@dataclass(frozen=True)
class GridSpec:
    resolution: float
    origin: tuple[float, float]
    width: int
    height: int

    def __post_init__(self):
        if not self.resolution > 0:
            raise ValueError("resolution must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("grid dimensions must be positive")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        object.__setattr__(self, "resolution", float(self.resolution))
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.width, self.height)

    def world_to_cell(self, xy) -> tuple[int, int] | None:
        """Cell index containing a world point, or None outside the grid."""
        i = int(np.floor((xy[0] - self.origin[0]) / self.resolution))
        j = int(np.floor((xy[1] - self.origin[1]) / self.resolution))
        if 0 <= i < self.width and 0 <= j < self.height:
            return (i, j)
        return None

    def cells_of(self, xy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorised ``world_to_cell``: returns ``(ij, inside)``.

        ``ij`` has shape (N, 2); rows where ``inside`` is False are garbage.
        """
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        ij = np.floor((xy - np.asarray(self.origin)) / self.resolution).astype(np.int64)
        inside = (
            (ij[:, 0] >= 0) & (ij[:, 0] < self.width) & (ij[:, 1] >= 0) & (ij[:, 1] < self.height)
        )
        return ij, inside

    def cell_center(self, i: int, j: int) -> tuple[float, float]:
        l = self.resolution
        return (self.origin[0] + (i + 0.5) * l, self.origin[1] + (j + 0.5) * l)

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Center coordinate arrays ``(X, Y)`` of shape ``(width, height)``."""
        l = self.resolution
        xs = self.origin[0] + (np.arange(self.width) + 0.5) * l
        ys = self.origin[1] + (np.arange(self.height) + 0.5) * l
        return np.meshgrid(xs, ys, indexing="ij")

    def check_same(self, other: "GridSpec"):
        if self != other:
            raise GridSpecMismatch(f"grid specs differ: {self} vs {other}")


@dataclass
class BinaryLayer:
    """Boolean navigability layer; True means traversable / explored."""

    spec: GridSpec
    data: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=bool)
        if self.data.shape != self.spec.shape:
            raise ValueError(f"layer shape {self.data.shape} does not match {self.spec.shape}")

    @classmethod
    def full(cls, spec: GridSpec, value: bool, name: str = "") -> "BinaryLayer":
        return cls(spec, np.full(spec.shape, bool(value)), name)

    def __eq__(self, other):
        if not isinstance(other, BinaryLayer):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(self.data, other.data)

    def copy(self, name: str | None = None) -> "BinaryLayer":
        return BinaryLayer(self.spec, self.data.copy(), self.name if name is None else name)


@dataclass
class ElevationMap:
    """Per-cell ground height statistics. Empty cells hold NaN in every field."""

    spec: GridSpec
    z_avg: np.ndarray
    z_min: np.ndarray
    z_max: np.ndarray
    z_var: np.ndarray

    @classmethod
    def empty(cls, spec: GridSpec) -> "ElevationMap":
        nan = lambda: np.full(spec.shape, np.nan)
        return cls(spec, nan(), nan(), nan(), nan())

    @property
    def valid(self) -> np.ndarray:
        return ~np.isnan(self.z_avg)

    def __eq__(self, other):
        if not isinstance(other, ElevationMap):
            return NotImplemented
        same = lambda a, b: np.array_equal(a, b, equal_nan=True)
        return (
            self.spec == other.spec
            and same(self.z_avg, other.z_avg)
            and same(self.z_min, other.z_min)
            and same(self.z_max, other.z_max)
            and same(self.z_var, other.z_var)
        )


@dataclass
class MultiElevationMap:
    """Per-cell sorted lists of elevations in CSR layout.

    The values of flat cell ``c = i * height + j`` are
    ``z[ptr[c]:ptr[c + 1]]``. ``synthesized`` flags cells filled by expansion.
    """

    spec: GridSpec
    ptr: np.ndarray
    z: np.ndarray
    synthesized: np.ndarray
    dropped: int = 0

    @classmethod
    def from_points(cls, spec: GridSpec, xyz: np.ndarray) -> "MultiElevationMap":
        xyz = np.asarray(xyz, dtype=float).reshape(-1, 3)
        ij, inside = spec.cells_of(xyz[:, :2])
        flat = ij[inside, 0] * spec.height + ij[inside, 1]
        z = xyz[inside, 2]
        order = np.lexsort((z, flat))
        flat, z = flat[order], z[order]
        counts = np.bincount(flat, minlength=spec.width * spec.height)
        ptr = np.concatenate([[0], np.cumsum(counts)])
        return cls(spec, ptr, z, np.zeros(spec.shape, dtype=bool), int((~inside).sum()))

    @property
    def counts(self) -> np.ndarray:
        return np.diff(self.ptr).reshape(self.spec.shape)

    def values(self, i: int, j: int) -> np.ndarray:
        c = i * self.spec.height + j
        return self.z[self.ptr[c]:self.ptr[c + 1]]

    def min_map(self) -> np.ndarray:
        """Minimum elevation per cell, +inf where the cell is empty."""
        out = np.full(self.spec.width * self.spec.height, np.inf)
        counts = np.diff(self.ptr)
        nonempty = counts > 0
        # values are sorted within a cell, so the first one is the minimum
        out[nonempty] = self.z[self.ptr[:-1][nonempty]]
        return out.reshape(self.spec.shape)

    def to_points(self) -> np.ndarray:
        """One 3D point per stored elevation, at the owning cell's center."""
        counts = np.diff(self.ptr)
        flat = np.repeat(np.arange(counts.size), counts)
        X, Y = self.spec.cell_centers()
        return np.column_stack([X.ravel()[flat], Y.ravel()[flat], self.z])


@dataclass
class IndexMap:
    """Per-cell sum and count of traversability indices."""

    spec: GridSpec
    total: np.ndarray
    count: np.ndarray

    @property
    def average(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.count > 0, self.total / np.maximum(self.count, 1), np.nan)

    def __eq__(self, other):
        if not isinstance(other, IndexMap):
            return NotImplemented
        return (
            self.spec == other.spec
            and np.array_equal(self.total, other.total)
            and np.array_equal(self.count, other.count)
        )


@dataclass
class PointCloud:
    xyz: np.ndarray
    ring: np.ndarray | None = None
    frame: str = "sensor"

    def __post_init__(self):
        self.xyz = np.asarray(self.xyz, dtype=float).reshape(-1, 3)
        if self.ring is not None:
            self.ring = np.asarray(self.ring, dtype=np.int64)
            if self.ring.shape != (len(self.xyz),):
                raise ValueError("ring array must have one entry per point")
        if self.frame not in ("sensor", "world"):
            raise ValueError(f"unknown frame tag {self.frame!r}")

    def __len__(self):
        return len(self.xyz)


@dataclass
class Pose:
    translation: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 0.0, 1.0]))

    def __post_init__(self):
        self.translation = np.asarray(self.translation, dtype=float).reshape(3)
        self.rotation = np.asarray(self.rotation, dtype=float).reshape(4)
        if abs(np.linalg.norm(self.rotation) - 1.0) > 1e-9:
            raise ValueError("rotation quaternion must have unit norm")

    @classmethod
    def from_xyz_yaw(cls, xyz, yaw: float) -> "Pose":
        return cls(xyz, np.array([0.0, 0.0, np.sin(yaw / 2), np.cos(yaw / 2)]))

    def matrix(self) -> np.ndarray:
        return Rotation.from_quat(self.rotation).as_matrix()


@dataclass
class Trajectory:
    times: np.ndarray
    poses: list[Pose]

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float).reshape(-1)
        if len(self.times) != len(self.poses):
            raise ValueError("one timestamp per pose required")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("timestamps must be strictly increasing")

    def __len__(self):
        return len(self.poses)

    @property
    def xyz(self) -> np.ndarray:
        if not self.poses:
            return np.zeros((0, 3))
        return np.array([p.translation for p in self.poses])


def transform_cloud(cloud: PointCloud, pose: Pose) -> PointCloud:
    if cloud.frame != "sensor":
        raise ValueError("transform_cloud expects a sensor-frame cloud")
    xyz = cloud.xyz @ pose.matrix().T + pose.translation
    return PointCloud(xyz, None if cloud.ring is None else cloud.ring.copy(), "world")


def _snap(radius: float) -> float:
    """Round radii within float noise of an integer (0.3 / 0.1 gives 2.999...)."""
    k = round(radius)
    return float(k) if abs(radius - k) < 1e-9 else float(radius)


def disc(radius: float) -> np.ndarray:
    """Boolean disc structuring element of Euclidean radius in cells."""
    radius = _snap(radius)
    r = int(np.floor(radius))
    d = np.arange(-r, r + 1)
    return (d[:, None] ** 2 + d[None, :] ** 2) <= radius * radius


def morph_close(layer: BinaryLayer, radius: float) -> BinaryLayer:
    """Closing of the true-set by a disc; the grid is padded with False."""
    radius = _snap(radius)
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius < 1:
        return layer.copy()
    se = disc(radius)
    r = se.shape[0] // 2
    padded = np.pad(layer.data, r, constant_values=False)
    grown = ndimage.binary_dilation(padded, structure=se)
    closed = ndimage.binary_erosion(grown, structure=se, border_value=0)
    return BinaryLayer(layer.spec, closed[r:-r, r:-r], layer.name)


def erode(layer: BinaryLayer, radius: float) -> BinaryLayer:
    """Erosion of the true-set by a disc; cells outside the grid count as False."""
    radius = _snap(radius)
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius < 1:
        return layer.copy()
    out = ndimage.binary_erosion(layer.data, structure=disc(radius), border_value=0)
    return BinaryLayer(layer.spec, out, layer.name)


def layer_and(layers: list[BinaryLayer]) -> BinaryLayer:
    if not layers:
        raise ValueError("layer_and needs at least one layer")
    spec = layers[0].spec
    out = np.ones(spec.shape, dtype=bool)
    for layer in layers:
        spec.check_same(layer.spec)
        out &= layer.data
    return BinaryLayer(spec, out)


def layer_or(a: BinaryLayer, b: BinaryLayer) -> BinaryLayer:
    a.spec.check_same(b.spec)
    return BinaryLayer(a.spec, a.data | b.data)


def rasterize_points(spec: GridSpec, xy: np.ndarray) -> np.ndarray:
    """Boolean mask of cells receiving at least one of the given points."""
    mask = np.zeros(spec.shape, dtype=bool)
    ij, inside = spec.cells_of(xy)
    mask[ij[inside, 0], ij[inside, 1]] = True
    return mask
