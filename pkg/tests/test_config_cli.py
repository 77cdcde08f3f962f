import json

import numpy as np
import pytest

from navmap.cli import main
from navmap.config import ConfigError, MapConfig, format_config, load_config, parse_config
from navmap.render import PALETTE, VETO_ORDER, palette_comment, veto_labels
from navmap.scan_io import read_pgm
from navmap.synth.presets import Preset, rect
from navmap.synth import Box, LidarModel, SceneSpec, TerrainRegion

LAYERS = ("explored", "positive", "traversable", "negative", "fused")


def _tiny_scene_file(path):
    scene = SceneSpec("yard", regions=[TerrainRegion(rect(0, 0, 8, 6), 0.09)],
                      boxes=[Box(4.05, 3.55, 4.55, 4.05, 0.8)])
    preset = Preset(scene, [(1.0, 2.0), (7.0, 2.0)], LidarModel(mount_height=0.6, range_noise=0.01), 0.5)
    path.write_text(json.dumps(preset.to_dict()))
    return path


@pytest.fixture(scope="module")
def built(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    scene = _tiny_scene_file(root / "yard.json")
    assert main(["synth-gen", str(scene), "--out", str(root / "data"), "--seed", "1"]) == 0
    assert main(["build-map", str(root / "data"), "--out", str(root / "map")]) == 0
    return root


def test_config_defaults_roundtrip(tmp_path):
    cfg = MapConfig()
    path = tmp_path / "cfg.txt"
    path.write_text(format_config(cfg))
    assert load_config(path) == cfg


def test_config_strict_errors():
    items = {k: str(v) for k, v in MapConfig().items().items()}
    missing = dict(items)
    del missing["voxel_size"]
    with pytest.raises(ConfigError, match="missing config key: voxel_size"):
        parse_config(missing)
    with pytest.raises(ConfigError, match="unknown config key"):
        parse_config({**items, "bogus": "1"})
    with pytest.raises(ConfigError, match="cannot parse"):
        parse_config({**items, "neg_expansions": "five"})
    for key, bad in (("trav_gamma", "0"), ("p_hit", "1.5"), ("resolution", "-0.1"),
                     ("grid_origin", "1;2"), ("grid_size", "0,5"), ("neg_expansions", "0")):
        with pytest.raises(ConfigError):
            parse_config({**items, key: bad})
    assert parse_config({**items, "grid_size": "30,20"}).size_override() == (30, 20)


def test_build_map_artifacts(built):
    out = built / "map"
    names = sorted(p.name for p in out.iterdir())
    expect = [f"{n}.{ext}" for n in LAYERS for ext in ("pgm", "meta")]
    expect += ["traversability_index.csv", "traversability_index.meta", "manifest.txt", "config.txt"]
    assert names == sorted(expect)
    fused = read_pgm(out / "fused.pgm")
    assert fused.data.any() and not fused.data.all()
    assert load_config(out / "config.txt") == MapConfig()


def test_build_map_with_config(built, tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text(format_config(MapConfig(neg_expansions=3)))
    assert main(["build-map", str(built / "data"), "--config", str(cfg), "--out", str(tmp_path / "m")]) == 0
    assert "neg_expansions = 3" in (tmp_path / "m" / "config.txt").read_text()


def test_validate_and_render(built, tmp_path):
    rep = tmp_path / "rep"
    assert main(["validate", str(built / "map"), str(built / "data" / "truth"), "--n", "50",
                 "--out", str(rep)]) == 0
    assert (rep / "report.txt").read_text().startswith("tuples                 50")
    img = tmp_path / "r.ppm"
    assert main(["render", str(built / "map"), "--out", str(img)]) == 0
    raw = img.read_bytes()
    lines = raw.split(b"\n", 4)
    assert lines[0] == b"P6" and lines[1] == f"# {palette_comment()}".encode()
    spec = read_pgm(built / "map" / "fused.pgm").spec
    assert lines[2] == f"{spec.width} {spec.height}".encode()
    assert len(lines[4]) == 3 * spec.width * spec.height


def test_veto_labels_priority(built):
    layers = {n: read_pgm(built / "map" / f"{n}.pgm") for n in LAYERS}
    labels = veto_labels(layers)
    assert np.array_equal(labels == 0, layers["fused"].data)
    pos_blocked = ~layers["positive"].data & ~layers["fused"].data
    assert np.all(labels[pos_blocked] == 1)
    assert len(VETO_ORDER) + 1 == len(PALETTE)


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["build-map"],
    ["build-map", "/nonexistent/dataset", "--out", "/tmp/x"],
    ["synth-gen", "no_such_scene", "--out", "/tmp/x"],
    ["render", "/nonexistent/map"],
])
def test_cli_failures_exit_one(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        code = main(argv)
        raise SystemExit(code)
    assert exc.value.code == 1
    assert "error" in capsys.readouterr().err


def test_cli_bad_config_exit_one(built, tmp_path, capsys):
    cfg = tmp_path / "c.txt"
    cfg.write_text("resolution = 0.1\n")
    assert main(["build-map", str(built / "data"), "--config", str(cfg), "--out", str(tmp_path / "m")]) == 1
    assert "missing config key" in capsys.readouterr().err
