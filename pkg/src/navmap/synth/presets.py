"""Bundled scenes, keyed by name in ``PRESETS``.

Surfaces sit just below voxel boundaries (0.09, 0.29, ...) so each level fills
one voxel layer cleanly.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .lidar import LidarModel
from .scene import Box, Cylinder, Ramp, SceneSpec, Step, TerrainRegion

ROAD = 0.09
SIDEWALK = 0.29


@dataclass
class Preset:
    scene: SceneSpec
    path: list
    lidar: LidarModel = field(default_factory=LidarModel)
    spacing: float = 0.25

    def to_dict(self) -> dict:
        return {"scene": self.scene.to_dict(), "path": [list(p) for p in self.path],
                "lidar": asdict(self.lidar), "spacing": self.spacing}

    @classmethod
    def from_dict(cls, d: dict) -> "Preset":
        return cls(SceneSpec.from_dict(d["scene"]), [tuple(p) for p in d["path"]],
                   LidarModel(**d.get("lidar", {})), float(d.get("spacing", 0.25)))


def rect(x0, y0, x1, y1) -> list:
    return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]


def octagon(cx, cy, r) -> list:
    a = np.radians(22.5 + 45 * np.arange(8))
    return [(round(cx + r * np.cos(t), 6), round(cy + r * np.sin(t), 6)) for t in a]


def cell_disc(cx, cy, radius_cells: int, l: float = 0.1, pad: float = 0.0) -> list:
    """Staircase outline of the digital disc of grid cells centred on cell ``(cx, cy)``.

    Every grid cell is then entirely on or off the shape, and the shape is
    unchanged by a morphological opening with a smaller disc. ``pad`` grows
    the outline outward (keep it below ``l / 2`` to leave the cell set intact).
    """
    r = radius_cells
    rows = np.arange(-r, r + 1)
    half = np.floor(np.sqrt(r * r - rows * rows) + 1e-9)
    right = []
    for k, h in zip(rows, half):
        y0, y1 = cy + (k - 0.5) * l, cy + (k + 0.5) * l
        lo = y0 - pad if k <= 0 else y0 + pad
        hi = y1 + pad if k >= 0 else y1 - pad
        x = (h + 0.5) * l + pad
        right += [(x, lo), (x, hi)]
    left = [(-x, y) for x, y in reversed(right)]
    out = []
    for x, y in right + left:
        q = (round(float(cx + x), 6), round(float(y), 6))
        if not out or out[-1] != q:
            out.append(q)
    return out


def _lidar() -> LidarModel:
    return LidarModel(mount_height=0.6, range_noise=0.01, max_range=30.0)


def curb() -> Preset:
    """Road and raised sidewalk split by a 20 cm curb; a curb-cut ramp links them."""
    scene = SceneSpec(
        name="curb",
        regions=[
            TerrainRegion(rect(0, -6, 16, 0), ROAD, name="road"),
            TerrainRegion(rect(0, 0, 16, 3.8), SIDEWALK, name="sidewalk"),
        ],
        ramps=[Ramp(rect(11, -2.4, 13, 0), (12, -2.4), (12, 0), ROAD, SIDEWALK, name="curb_cut")],
        steps=[
            Step([(0, 0), (11, 0)], SIDEWALK - ROAD, name="curb"),
            Step([(13, 0), (16, 0)], SIDEWALK - ROAD, name="curb"),
            Step([(11, -2.4), (11, 0)], SIDEWALK - ROAD, name="ramp_side"),
            Step([(13, -2.4), (13, 0)], SIDEWALK - ROAD, name="ramp_side"),
        ],
        boxes=[Box(0, 3.55, 16, 3.8, 1.5, name="wall")],
        cylinders=[Cylinder(6.05, 0.65, 0.08, 2.5, name="lamp_post")],
    )
    path = [(1.0, 1.8), (10.5, 1.8), (12.0, 0.3), (12.0, -3.5), (1.0, -3.5)]
    return Preset(scene, path, _lidar(), 0.25)


def plaza() -> Preset:
    """Open square with asphalt, cement, grass and gravel plus street furniture.

    The paving continues past the evaluated 28 x 20 m window.
    """
    scene = SceneSpec(
        name="plaza",
        regions=[
            TerrainRegion(rect(-4, -4, 32, 24), ROAD, name="asphalt"),
            TerrainRegion(rect(14, 11, 32, 24), ROAD, name="cement"),
            TerrainRegion(rect(5, 12, 11, 16), ROAD, 0.03, "rough", name="grass"),
            TerrainRegion(rect(16, 4, 21, 6.5), ROAD, 0.015, "rough", name="gravel"),
        ],
        # obstacle faces sit mid-cell so voxelization and truth agree
        boxes=[
            Box(0.05, 19.45, 9.05, 20.45, 1.5, name="facade"),
            Box(8.05, 5.05, 9.65, 5.55, 0.45, name="bench_1"),
            Box(17.05, 13.05, 18.65, 13.55, 0.45, name="bench_2"),
        ],
        cylinders=[
            Cylinder(6.05, 7.05, 0.12, 2.5, name="pole_1"),
            Cylinder(21.05, 12.05, 0.12, 2.5, name="pole_2"),
            Cylinder(13.05, 15.55, 0.12, 2.5, name="pole_3"),
            Cylinder(12.05, 4.05, 0.25, 0.9, name="bin_1"),
            Cylinder(24.55, 16.55, 0.25, 0.9, name="bin_2"),
        ],
        roughness_seed=7,
        extent=(0, 0, 28, 20),
    )
    path = [(2.5, 2.5), (25.5, 2.5), (25.5, 17.5), (2.5, 17.5), (2.5, 9.5), (23.0, 9.5)]
    return Preset(scene, path, _lidar(), 0.25)


def two_level() -> Preset:
    """Lower yard with a ramp up to a plateau; a raised platform has no access.

    The path stays in the yard; the plateau must be linked through the ramp.
    The ramp is steep enough that its surface fills each voxel layer it crosses.
    """
    plateau = 0.29
    platform = 0.49
    # the outline sits between terrain nodes so each cliff face lies in yard cells
    plat = cell_disc(5.05, 8.55, 15, pad=0.025)
    scene = SceneSpec(
        name="two_level",
        regions=[
            TerrainRegion(rect(0, 0, 20, 16), ROAD, name="yard"),
            TerrainRegion(rect(12, 9, 20, 16), plateau, name="plateau"),
            TerrainRegion(plat, platform, name="platform"),
        ],
        ramps=[Ramp(rect(14, 8, 16, 9), (15, 8), (15, 9), ROAD, plateau, name="ramp")],
        steps=[
            Step([(12, 16), (12, 9), (14, 9)], plateau - ROAD, name="plateau_edge"),
            Step([(16, 9), (20, 9)], plateau - ROAD, name="plateau_edge"),
            Step([(14, 8), (14, 9)], plateau - ROAD, name="ramp_side"),
            Step([(16, 8), (16, 9)], plateau - ROAD, name="ramp_side"),
            Step(plat + [plat[0]], platform - ROAD, name="platform_edge"),
        ],
    )
    path = [(1.5, 2.0), (18.5, 2.0), (18.5, 4.5), (1.5, 4.5)]
    return Preset(scene, path, _lidar(), 0.25)


PRESETS = {"curb": curb, "plaza": plaza, "two_level": two_level}


def load_preset(name_or_path) -> Preset:
    """A bundled preset by name, or a JSON scene description file."""
    if str(name_or_path) in PRESETS:
        return PRESETS[str(name_or_path)]()
    path = Path(name_or_path)
    if not path.is_file():
        raise FileNotFoundError(f"unknown preset or missing scene file: {name_or_path}")
    return Preset.from_dict(json.loads(path.read_text()))
