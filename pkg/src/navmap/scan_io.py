"""Dataset ingestion and map serialization.

Dataset layout::

    root/
      trajectory.csv      t,x,y,z,qx,qy,qz,qw   (one row per scan, sensor pose in world)
      dataset.meta        optional key = value lines (channels, vfov_deg, mount_height,
                          grid_origin_x, grid_origin_y, grid_width, grid_height, resolution)
      scans/000000.csv    ring,x,y,z            (sensor frame, meters)

Maps are written as a payload plus a ``<name>.meta`` sidecar. Binary layers
use 8-bit PGM (P5, 255 = true). Scalar grids are CSV with ``NaN`` for empty
cells; multi-channel grids stack channels vertically. In both payloads the
first row is the top of the map (largest ``j``).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import BinaryLayer, ElevationMap, GridSpec, IndexMap, PointCloud, Pose, Trajectory


class MissingFile(FileNotFoundError):
    pass


class RowCountMismatch(ValueError):
    pass


class MalformedRecord(ValueError):
    pass


class FormatError(ValueError):
    pass


TRAJECTORY_HEADER = "t,x,y,z,qx,qy,qz,qw"
SCAN_HEADER = "ring,x,y,z"


@dataclass
class LidarInfo:
    channels: int = 16
    vfov_deg: float = 30.0


@dataclass
class Dataset:
    trajectory: Trajectory
    scans: list[PointCloud]
    mount_height: float = 0.5
    lidar: LidarInfo = field(default_factory=LidarInfo)
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.scans)

    def grid_hint(self) -> GridSpec | None:
        keys = ("resolution", "grid_origin_x", "grid_origin_y", "grid_width", "grid_height")
        if not all(k in self.meta for k in keys):
            return None
        m = self.meta
        return GridSpec(
            float(m["resolution"]),
            (float(m["grid_origin_x"]), float(m["grid_origin_y"])),
            int(m["grid_width"]),
            int(m["grid_height"]),
        )


def read_keyvalue(path) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def write_keyvalue(path, items: dict):
    with open(path, "w", newline="\n") as f:
        for key, value in items.items():
            f.write(f"{key} = {value}\n")


def _parse_float(text: str, where: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise MalformedRecord(f"{where}: non-numeric field {text!r}") from None


def load_trajectory(path) -> Trajectory:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"missing {path}")
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip().replace(" ", "") != TRAJECTORY_HEADER:
        raise MalformedRecord(f"{path}: header must be {TRAJECTORY_HEADER!r}")
    times, poses = [], []
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        fields = line.split(",")
        where = f"{path}:{lineno}"
        if len(fields) != 8:
            raise MalformedRecord(f"{where}: expected 8 fields, got {len(fields)}")
        t, x, y, z, qx, qy, qz, qw = (_parse_float(v, where) for v in fields)
        q = np.array([qx, qy, qz, qw])
        if abs(np.linalg.norm(q) - 1.0) > 1e-6:
            raise MalformedRecord(f"{where}: quaternion norm {np.linalg.norm(q):.6g} is not 1")
        # renormalise so tiny export rounding survives Pose's stricter check
        poses.append(Pose([x, y, z], q / np.linalg.norm(q)))
        times.append(t)
    if len(times) > 1 and np.any(np.diff(times) <= 0):
        raise MalformedRecord(f"{path}: timestamps must be strictly increasing")
    return Trajectory(np.array(times), poses)


def load_scan(path, channels: int = 16) -> PointCloud:
    path = Path(path)
    with open(path) as f:
        header = f.readline().strip().replace(" ", "")
        if header != SCAN_HEADER:
            raise MalformedRecord(f"{path}: header must be {SCAN_HEADER!r}")
        try:
            data = np.loadtxt(f, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise MalformedRecord(f"{path}: {exc}") from None
    if data.size == 0:
        raise MalformedRecord(f"{path}: scan has no points")
    if data.shape[1] != 4:
        raise MalformedRecord(f"{path}: expected 4 columns")
    ring = data[:, 0]
    if np.any(ring != np.round(ring)) or np.any(ring < 0) or np.any(ring >= channels):
        raise MalformedRecord(f"{path}: ring ids must be integers in [0, {channels})")
    return PointCloud(data[:, 1:], ring.astype(np.int64), "sensor")


def load_dataset(root) -> Dataset:
    root = Path(root)
    traj_path = root / "trajectory.csv"
    scan_dir = root / "scans"
    if not traj_path.is_file():
        raise MissingFile(f"missing {traj_path}")
    if not scan_dir.is_dir():
        raise MissingFile(f"missing {scan_dir}")
    meta = read_keyvalue(root / "dataset.meta") if (root / "dataset.meta").is_file() else {}
    lidar = LidarInfo(int(meta.get("channels", 16)), float(meta.get("vfov_deg", 30.0)))
    trajectory = load_trajectory(traj_path)
    scan_files = sorted(p for p in scan_dir.iterdir() if p.suffix == ".csv")
    if len(scan_files) != len(trajectory):
        raise RowCountMismatch(
            f"{len(trajectory)} trajectory rows but {len(scan_files)} scan files"
        )
    for k, p in enumerate(scan_files):
        if p.name != f"{k:06d}.csv":
            raise MissingFile(f"expected scan {k:06d}.csv, found {p.name}")
    scans = [load_scan(p, lidar.channels) for p in scan_files]
    return Dataset(trajectory, scans, float(meta.get("mount_height", 0.5)), lidar, meta)


def write_dataset(root, dataset: Dataset):
    root = Path(root)
    (root / "scans").mkdir(parents=True, exist_ok=True)
    rows = [TRAJECTORY_HEADER]
    for t, pose in zip(dataset.trajectory.times, dataset.trajectory.poses):
        vals = [t, *pose.translation, *pose.rotation]
        rows.append(",".join(f"{v:.9f}" for v in vals))
    (root / "trajectory.csv").write_text("\n".join(rows) + "\n")
    for k, scan in enumerate(dataset.scans):
        data = np.column_stack([scan.ring, scan.xyz])
        with open(root / "scans" / f"{k:06d}.csv", "w", newline="\n") as f:
            f.write(SCAN_HEADER + "\n")
            np.savetxt(f, data, fmt=["%d", "%.6f", "%.6f", "%.6f"], delimiter=",")
    meta = {
        "channels": dataset.lidar.channels,
        "vfov_deg": repr(float(dataset.lidar.vfov_deg)),
        "mount_height": repr(float(dataset.mount_height)),
    }
    meta.update({k: v for k, v in dataset.meta.items() if k not in meta})
    write_keyvalue(root / "dataset.meta", meta)


# -- maps --------------------------------------------------------------------

def _meta_items(spec: GridSpec, name: str, semantics: str, **extra) -> dict:
    items = {
        "resolution": repr(spec.resolution),
        "origin_x": repr(spec.origin[0]),
        "origin_y": repr(spec.origin[1]),
        "width": spec.width,
        "height": spec.height,
        "layer": name,
        "semantics": semantics,
    }
    items.update(extra)
    return items


def _meta_path(path: Path) -> Path:
    return path.with_suffix(".meta")


def read_meta(path) -> tuple[GridSpec, dict]:
    meta_path = _meta_path(Path(path))
    if not meta_path.is_file():
        raise MissingFile(f"missing {meta_path}")
    meta = read_keyvalue(meta_path)
    try:
        spec = GridSpec(
            float(meta["resolution"]),
            (float(meta["origin_x"]), float(meta["origin_y"])),
            int(meta["width"]),
            int(meta["height"]),
        )
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{meta_path}: bad or missing key ({exc})") from None
    return spec, meta


def _to_image(a: np.ndarray) -> np.ndarray:
    # (i, j) grid -> image rows top-down
    return a.T[::-1]


def _from_image(img: np.ndarray) -> np.ndarray:
    return img[::-1].T


def write_pgm(path, layer: BinaryLayer, name: str | None = None):
    path = Path(path)
    spec = layer.spec
    img = np.where(_to_image(layer.data), 255, 0).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(f"P5\n{spec.width} {spec.height}\n255\n".encode("ascii"))
        f.write(img.tobytes())
    write_keyvalue(
        _meta_path(path),
        _meta_items(spec, name or layer.name or path.stem, "binary: 255=true(traversable) 0=false"),
    )


def _pgm_tokens(buf: bytes, count: int) -> tuple[list[bytes], int]:
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        if pos < len(buf) and buf[pos:pos + 1] == b"#":
            while pos < len(buf) and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated PGM header")
        tokens.append(buf[start:pos])
    return tokens, pos + 1


def read_pgm(path) -> BinaryLayer:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"missing {path}")
    spec, meta = read_meta(path)
    buf = path.read_bytes()
    try:
        (magic, w, h, maxval), offset = _pgm_tokens(buf, 4)
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise FormatError(f"{path}: corrupt PGM header") from None
    if magic != b"P5" or maxval != 255:
        raise FormatError(f"{path}: only 8-bit P5 PGM is supported")
    if (w, h) != (spec.width, spec.height):
        raise FormatError(f"{path}: PGM size {w}x{h} disagrees with metadata")
    payload = buf[offset:]
    if len(payload) != w * h:
        raise FormatError(f"{path}: expected {w * h} pixel bytes, found {len(payload)}")
    img = np.frombuffer(payload, dtype=np.uint8).reshape(h, w)
    if not np.all((img == 0) | (img == 255)):
        raise FormatError(f"{path}: binary layer holds values other than 0/255")
    return BinaryLayer(spec, _from_image(img == 255), meta.get("layer", path.stem))


def write_grid_csv(path, spec: GridSpec, channels: dict[str, np.ndarray], name: str, semantics: str):
    path = Path(path)
    blocks = []
    for arr in channels.values():
        if arr.shape != spec.shape:
            raise ValueError("channel shape does not match grid")
        blocks.append(_to_image(np.asarray(arr, dtype=float)))
    with open(path, "w", newline="\n") as f:
        np.savetxt(f, np.vstack(blocks), fmt="%.17g", delimiter=",")
    write_keyvalue(
        _meta_path(path),
        _meta_items(spec, name, semantics, channels=",".join(channels)),
    )


def read_grid_csv(path) -> tuple[GridSpec, dict[str, np.ndarray], dict]:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"missing {path}")
    spec, meta = read_meta(path)
    names = [c for c in meta.get("channels", "value").split(",") if c]
    rows = [r for r in path.read_text().splitlines() if r.strip()]
    if len(rows) != spec.height * len(names):
        raise FormatError(f"{path}: expected {spec.height * len(names)} rows, found {len(rows)}")
    try:
        data = np.array([[float(v) for v in r.split(",")] for r in rows])
    except ValueError:
        raise FormatError(f"{path}: non-numeric cell") from None
    if data.ndim != 2 or data.shape[1] != spec.width:
        raise FormatError(f"{path}: rows must have {spec.width} columns")
    channels = {}
    for k, name in enumerate(names):
        channels[name] = _from_image(data[k * spec.height:(k + 1) * spec.height])
    return spec, channels, meta


def write_map(layer, path, name: str | None = None):
    """Write a BinaryLayer (PGM), ElevationMap or IndexMap (CSV) plus sidecar."""
    if isinstance(layer, BinaryLayer):
        write_pgm(path, layer, name)
    elif isinstance(layer, ElevationMap):
        write_grid_csv(
            path, layer.spec,
            {"avg": layer.z_avg, "min": layer.z_min, "max": layer.z_max, "var": layer.z_var},
            name or Path(path).stem, "elevation: meters, NaN=no ground sample",
        )
    elif isinstance(layer, IndexMap):
        write_grid_csv(
            path, layer.spec,
            {"mean": layer.average, "sum": layer.total, "count": layer.count.astype(float)},
            name or Path(path).stem, "traversability index: mean of lambda_max/lambda_min, NaN=no sample",
        )
    else:
        raise TypeError(f"cannot serialise {type(layer).__name__}")


def read_map(path):
    path = Path(path)
    if path.suffix == ".pgm":
        return read_pgm(path)
    spec, ch, meta = read_grid_csv(path)
    names = tuple(ch)
    if names == ("avg", "min", "max", "var"):
        return ElevationMap(spec, ch["avg"], ch["min"], ch["max"], ch["var"])
    if names == ("mean", "sum", "count"):
        return IndexMap(spec, ch["sum"], ch["count"].astype(np.int64))
    if len(names) == 1:
        return spec, ch[names[0]]
    raise FormatError(f"{path}: unknown channel layout {names}")


def ensure_dir(path) -> Path:
    path = Path(path)
    os.makedirs(path, exist_ok=True)
    return path
