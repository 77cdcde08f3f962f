"""Build a map of the curb scene and look at which layer blocks what.

The robot drives along a sidewalk, down a curb cut and back along the road.
The curb face shows up in the positive layer, and the negative layer marks
the drop seen from the sidewalk side. The render colours every blocked cell
by the first layer that vetoes it.

    python demos/curb_walkthrough.py [out_dir]
"""

import sys
from pathlib import Path

import numpy as np

from navmap.config import MapConfig
from navmap.pipeline import build_map, write_result
from navmap.render import PALETTE, render_layers
from navmap.scan_io import load_dataset, read_pgm
from navmap.synth import generate_dataset, load_preset
from navmap.validation import pixel_metrics

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_curb")
preset = load_preset("curb")
print(f"scanning '{preset.scene.name}' along {len(preset.path)} waypoints")
generate_dataset(preset.scene, preset.path, preset.lidar, preset.spacing, seed=0, out_dir=out / "data")

dataset = load_dataset(out / "data")
print(f"loaded {len(dataset)} scans, {sum(len(s) for s in dataset.scans)} points")
result = build_map(dataset)
write_result(result, out / "map", MapConfig())

total = result.spec.width * result.spec.height
print("\nlayer        traversable cells")
for name, layer in result.layers.items():
    print(f"{name:12s} {layer.data.sum():6d} / {total}")

gt = read_pgm(out / "data" / "truth" / "fused.pgm")
m = pixel_metrics(result["fused"], gt)
print(f"\nfused vs truth: accuracy {m['accuracy']:.3f}, precision {m['precision']:.3f}, recall {m['recall']:.3f}")

labels = render_layers(result.layers, out / "map" / "render.ppm")
counts = np.bincount(labels.ravel(), minlength=len(PALETTE))
print("\nveto counts:", {name: int(c) for (name, _), c in zip(PALETTE, counts)})
print(f"image written to {out / 'map' / 'render.ppm'}")
