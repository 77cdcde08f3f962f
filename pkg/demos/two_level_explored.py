"""Explored-area extraction on a site with an unreachable platform.

Ground clusters are kept only if the robot's trajectory touches them. The
plateau joins the yard through a ramp, so it stays; the platform is cut off
by a 40 cm drop and is dropped even though the sensor sees its top.

    python demos/two_level_explored.py
"""

import numpy as np

from navmap.pipeline import build_map
from navmap.synth import generate_dataset, load_preset
from navmap.synth.scene import points_in_polygon

preset = load_preset("two_level")
dataset, truth = generate_dataset(preset.scene, preset.path, preset.lidar, preset.spacing, seed=0)
result = build_map(dataset)

spec = result.spec
X, Y = spec.cell_centers()
centers = np.column_stack([X.ravel(), Y.ravel()])
explored = result["explored"].data
for region in preset.scene.regions:
    cells = points_in_polygon(centers, region.polygon).reshape(spec.shape)
    if region.name == "yard":
        cells &= ~np.logical_or.reduce([points_in_polygon(centers, r.polygon).reshape(spec.shape)
                                        for r in preset.scene.regions[1:]])
    print(f"{region.name:9s} cells {cells.sum():5d}  explored {explored[cells].sum():5d}  "
          f"truth explored {truth['explored'].data[cells].sum():5d}")
