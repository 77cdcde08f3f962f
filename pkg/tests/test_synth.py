import filecmp

import numpy as np
import pytest

from navmap.core import Pose
from navmap.synth import (Box, LidarModel, PathOutsideScene, SceneSpec, Terrain, TerrainRegion, generate_dataset,
                          ground_truth, load_preset, raycast_scan, sample_path, scene_grid)
from navmap.synth.presets import cell_disc, rect
from navmap.synth.scene import points_in_polygon

LIDAR0 = LidarModel(mount_height=0.6, range_noise=0.0, max_range=30.0)


def _flat(extra=(), boxes=()):
    return SceneSpec("flat", regions=[TerrainRegion(rect(-10, -10, 10, 10), 0.0)] + list(extra), boxes=list(boxes))


def _world(cloud, pose):
    return cloud.xyz @ pose.matrix().T + pose.translation


def test_lowest_ring_radius_on_flat_ground():
    pose = Pose.from_xyz_yaw((0.0, 0.0, 0.6), 0.3)
    cloud = raycast_scan(_flat(), pose, LIDAR0, 0)
    r0 = cloud.ring == 0
    rng = np.hypot(cloud.xyz[r0, 0], cloud.xyz[r0, 1])
    assert r0.sum() == 900
    assert np.allclose(rng, 0.6 / np.tan(np.radians(15)), atol=1e-6)
    # upward rings never return on open flat ground
    assert cloud.ring.max() < 8


def test_noise_free_points_lie_on_surfaces():
    scene = _flat(boxes=[Box(2, -1, 3, 1, 1.0)])
    pose = Pose.from_xyz_yaw((0.0, 0.0, 0.6), 0.0)
    cloud = raycast_scan(scene, pose, LIDAR0, 0)
    res = Terrain(scene).surface_residual(_world(cloud, pose))
    assert res.max() <= 0.0 + 1e-6


def test_noise_bounded_by_sigma_scale():
    scene = _flat()
    pose = Pose.from_xyz_yaw((0.0, 0.0, 0.6), 0.0)
    clean = raycast_scan(scene, pose, LIDAR0, 0)
    noisy = raycast_scan(scene, pose, LidarModel(mount_height=0.6, range_noise=0.01), 0)
    dr = np.linalg.norm(noisy.xyz, axis=1) - np.linalg.norm(clean.xyz, axis=1)
    assert abs(dr.std() - 0.01) < 0.002


def test_box_occludes_terrain():
    scene = _flat(boxes=[Box(2, -1, 3, 1, 1.0)])
    pose = Pose.from_xyz_yaw((0.0, 0.0, 0.6), 0.0)
    w = _world(raycast_scan(scene, pose, LIDAR0, 0), pose)
    ahead = np.abs(w[:, 1]) < 0.5
    assert not np.any(ahead & (w[:, 0] > 2.0 + 1e-6))
    face = ahead & (np.abs(w[:, 0] - 2.0) < 1e-6)
    assert face.sum() > 0


def test_ditch_shadow_length():
    H, D, d = 0.6, 3.0, 0.4
    ditch = TerrainRegion(rect(D, -2, D + 3, 2), -d)
    pose = Pose.from_xyz_yaw((0.0, 0.0, H), 0.0)
    w = _world(raycast_scan(_flat([ditch]), pose, LIDAR0, 0), pose)
    shadow = D * d / H
    corridor = np.abs(w[:, 1]) < 0.5
    bottom = corridor & (w[:, 2] < -d + 0.05)
    assert not np.any(bottom & (w[:, 0] > D + 0.1) & (w[:, 0] < D + shadow - 0.1))
    assert np.any(corridor & (w[:, 0] > D + shadow - 0.1))


def test_scan_determinism():
    pose = Pose.from_xyz_yaw((0.0, 0.0, 0.6), 0.0)
    lid = LidarModel(mount_height=0.6)
    a = raycast_scan(_flat(), pose, lid, [3, 1])
    b = raycast_scan(_flat(), pose, lid, [3, 1])
    c = raycast_scan(_flat(), pose, lid, [3, 2])
    assert np.array_equal(a.xyz, b.xyz) and np.array_equal(a.ring, b.ring)
    assert not np.array_equal(a.xyz, c.xyz)


def test_sample_path():
    xy, yaw, s = sample_path([(0, 0), (10, 0)], 0.5)
    assert len(xy) == 21 and np.allclose(xy[-1], (10, 0)) and np.allclose(yaw, 0)
    xy, yaw, s = sample_path([(0, 0), (1, 0), (1, 1)], 0.25)
    assert len(xy) == 9 and np.allclose(xy[6], (1, 0.5)) and yaw[6] == pytest.approx(np.pi / 2)
    with pytest.raises(ValueError):
        sample_path([(0, 0)], 0.5)


def test_box_truth_and_path_check():
    scene = SceneSpec("boxy", regions=[TerrainRegion(rect(0, 0, 4, 4), 0.09)], boxes=[Box(1.05, 1.05, 1.55, 2.05, 0.5)])
    spec = scene_grid(scene, 0.1)
    assert (spec.width, spec.height) == (40, 40)
    gt = ground_truth(scene, np.array([[0.5, 0.5]]), spec)
    blocked = np.argwhere(~gt["positive"].data)
    assert blocked[:, 0].min() == 10 and blocked[:, 0].max() == 15
    assert blocked[:, 1].min() == 10 and blocked[:, 1].max() == 20
    assert len(blocked) == 6 * 11
    assert not np.any(gt["fused"].data & ~gt["positive"].data)
    with pytest.raises(PathOutsideScene):
        generate_dataset(scene, [(0.5, 1.5), (3.5, 1.5)], LIDAR0)


def test_regeneration_is_byte_identical(tmp_path):
    scene = SceneSpec("tiny", regions=[TerrainRegion(rect(0, 0, 4, 3), 0.09)], boxes=[Box(2.05, 2.05, 2.55, 2.55, 0.5)])
    lid = LidarModel(channels=4, h_res_deg=2.0, mount_height=0.6, range_noise=0.01)
    generate_dataset(scene, [(0.5, 1), (3.5, 1)], lid, 0.5, seed=4, out_dir=tmp_path / "a")
    generate_dataset(scene, [(0.5, 1), (3.5, 1)], lid, 0.5, seed=4, out_dir=tmp_path / "b")
    cmp = filecmp.dircmp(tmp_path / "a", tmp_path / "b")
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    assert files
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    assert not cmp.left_only and not cmp.right_only


def test_presets():
    curb = load_preset("curb")
    assert curb.scene.ramps[0].slope_deg < 10
    plaza = load_preset("plaza")
    xy = np.random.default_rng(0).uniform(0, 28, size=(20000, 2)) * [1, 20 / 28]
    assert {"smooth", "rough"} <= set(plaza.scene.label_at(xy).tolist())
    assert plaza.scene.bounds() == (0.0, 0.0, 28.0, 20.0)
    assert plaza.scene.terrain_bounds() == (-4.0, -4.0, 32.0, 24.0)
    two = load_preset("two_level")
    spec = scene_grid(two.scene, 0.1)
    gt = ground_truth(two.scene, sample_path(two.path, 0.25)[0], spec)
    X, Y = spec.cell_centers()
    plat = points_in_polygon(np.column_stack([X.ravel(), Y.ravel()]), two.scene.regions[2].polygon)
    plat = plat.reshape(spec.shape)
    assert plat.sum() > 0 and not gt["explored"].data[plat].any()
    plateau = (X > 12.5) & (Y > 9.5)
    assert gt.reachable[plateau].all() and gt["explored"].data[plateau].any()
    with pytest.raises(FileNotFoundError):
        load_preset("nope")


def test_preset_json_roundtrip(tmp_path):
    import json

    from navmap.synth.presets import Preset

    p = load_preset("plaza")
    path = tmp_path / "scene.json"
    path.write_text(json.dumps(p.to_dict()))
    q = load_preset(path)
    assert json.loads(json.dumps(q.to_dict())) == json.loads(json.dumps(p.to_dict()))
    assert np.array_equal(Terrain(q.scene).nodes, Terrain(p.scene).nodes, equal_nan=True)
    assert isinstance(q, Preset)


def test_cell_disc_covers_digital_disc():
    poly = cell_disc(5.05, 8.55, 6, pad=0.025)
    spec_x = np.arange(0, 100) * 0.1 + 0.05
    X, Y = np.meshgrid(spec_x, spec_x, indexing="ij")
    inside = points_in_polygon(np.column_stack([X.ravel(), Y.ravel()]), poly).reshape(X.shape)
    ci, cj = 50, 85
    ii, jj = np.indices(X.shape)
    assert np.array_equal(inside, (ii - ci) ** 2 + (jj - cj) ** 2 <= 36)


def test_extent_validation():
    scene = _flat()
    scene.extent = (1.0, 1.0, 0.0, 2.0)
    with pytest.raises(ValueError):
        scene.bounds()
