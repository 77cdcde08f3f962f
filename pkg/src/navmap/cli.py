"""Command line driver: build-map, validate, synth-gen, render."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, MapConfig, load_config
from .core import GridSpecMismatch
from .explored import NoGroundFound
from .pipeline import LAYER_FILES, build_map, write_result
from .render import palette_comment, render_layers
from .scan_io import FormatError, MalformedRecord, MissingFile, RowCountMismatch, load_dataset, read_pgm
from .traversability import NoCoverage
from .validation import EmptyFreeSpace, monte_carlo, write_report

# failures reported as a one-line diagnostic with exit code 1
EXPECTED_ERRORS = (ConfigError, GridSpecMismatch, NoGroundFound, NoCoverage, FormatError, MalformedRecord,
                   MissingFile, RowCountMismatch, EmptyFreeSpace, OSError, ValueError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def cmd_build_map(args) -> int:
    cfg = load_config(args.config) if args.config else MapConfig()
    dataset = load_dataset(args.dataset)
    result = build_map(dataset, cfg)
    out = write_result(result, args.out, cfg)
    counts = result.counts
    print(f"wrote {len(LAYER_FILES)} layers to {out} "
          f"(fused {counts['fused_true_cells']} of {result.spec.width * result.spec.height} cells traversable)")
    return 0


def cmd_validate(args) -> int:
    pred = read_pgm(Path(args.pred) / f"{args.layer}.pgm")
    truth = read_pgm(Path(args.truth) / f"{args.layer}.pgm")
    report = monte_carlo(pred, truth, n=args.n, seed=args.seed, robot_radius=args.robot_radius)
    write_report(report, args.out)
    sys.stdout.write(report.table())
    return 0


def cmd_synth_gen(args) -> int:
    from .synth import generate_dataset, load_preset

    preset = load_preset(args.scene)
    dataset, _ = generate_dataset(preset.scene, preset.path, preset.lidar, preset.spacing,
                                  seed=args.seed, out_dir=args.out)
    print(f"wrote {len(dataset)} scans of scene '{preset.scene.name}' plus truth to {args.out}")
    return 0


def cmd_render(args) -> int:
    src = Path(args.dir)
    layers = {name: read_pgm(src / f"{name}.pgm") for name in LAYER_FILES}
    out = Path(args.out) if args.out else src / "render.ppm"
    render_layers(layers, out)
    print(f"wrote {out} ({palette_comment()})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="navmap", description="Traversability maps from 3D LiDAR scans.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build-map", help="build all map layers from a dataset directory")
    p.add_argument("dataset", help="dataset directory (trajectory.csv, scans/)")
    p.add_argument("--config", help="key = value config file (defaults when omitted)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_build_map)

    p = sub.add_parser("validate", help="Monte Carlo planning agreement against a truth map")
    p.add_argument("pred", help="directory holding the predicted layer")
    p.add_argument("truth", help="directory holding the truth layer")
    p.add_argument("--layer", default="fused", help="layer name to compare (default fused)")
    p.add_argument("--n", type=int, default=1000, help="start-goal tuples (default 1000)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--robot-radius", type=float, default=0.3, help="inflation radius in meters")
    p.add_argument("--out", required=True, help="report directory")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("synth-gen", help="generate a synthetic dataset with ground truth")
    p.add_argument("scene", help="preset name (curb, plaza, two_level) or scene JSON file")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth_gen)

    p = sub.add_parser("render", help="colour the fused map by vetoing layer")
    p.add_argument("dir", help="build-map output directory")
    p.add_argument("--out", help="image path (default <dir>/render.ppm)")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EXPECTED_ERRORS as exc:
        print(f"navmap {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
