"""Monte Carlo planning check on the plaza scene.

Random start-goal pairs are planned with A* on both the built map and the
scene's truth map after inflating obstacles by the robot radius. The report
counts how often the two maps agree on whether a path exists, and how much
longer the paths on the built map are.

    python demos/plaza_validation.py [n_tuples]
"""

import sys

from navmap.pipeline import build_map
from navmap.synth import generate_dataset, load_preset
from navmap.validation import monte_carlo

n = int(sys.argv[1]) if len(sys.argv) > 1 else 300
preset = load_preset("plaza")
dataset, truth = generate_dataset(preset.scene, preset.path, preset.lidar, preset.spacing, seed=0)
result = build_map(dataset)

rough = truth.rough & truth["explored"].data
print(f"rough cells the map refuses: {(~result['fused'].data[rough]).mean():.3f}")

report = monte_carlo(result["fused"], truth["fused"], n=n, seed=0)
print(report.table())
print("overlength histogram (bin start in m, count):")
for start, count in report.histogram():
    print(f"  {start:5.2f}  {count}")
