import numpy as np
import pytest

from conftest import straight_trajectory
from navmap.core import BinaryLayer, GridSpec, GridSpecMismatch
from navmap.fusion import fuse, trajectory_footprint_layer

SPEC = GridSpec(0.1, (0.0, 0.0), 20, 20)


def test_footprint_off_grid_is_empty():
    layer = trajectory_footprint_layer(straight_trajectory(10.0, 11.0, 10.0, 0.6, 3), 0.3, SPEC)
    assert not layer.data.any()


def test_footprint_disc_of_one_and_a_half_cells():
    layer = trajectory_footprint_layer(straight_trajectory(1.05, 1.05, 1.05, 0.6, 1), 0.15, SPEC)
    # the 3x3 block lies within 0.15 m; the next ring does not
    assert np.array_equal(np.argwhere(layer.data), [[i, j] for i in (9, 10, 11) for j in (9, 10, 11)])


def test_footprint_matches_bruteforce_union():
    rng = np.random.default_rng(0)
    traj = straight_trajectory(0.2, 1.8, 1.0, 0.6, 9)
    r = 0.27
    layer = trajectory_footprint_layer(traj, r, SPEC)
    X, Y = SPEC.cell_centers()
    expect = np.zeros(SPEC.shape, bool)
    for x, y, _ in traj.xyz:
        expect |= (X - x) ** 2 + (Y - y) ** 2 <= r * r
    assert np.array_equal(layer.data, expect)
    with pytest.raises(ValueError):
        trajectory_footprint_layer(traj, 0.0, SPEC)


def test_fuse_examples():
    t, f = np.ones(SPEC.shape, bool), np.zeros(SPEC.shape, bool)
    L = lambda a: BinaryLayer(SPEC, a.copy())
    assert fuse(L(t), L(t), L(t), L(t), L(f)).data.all()
    assert not fuse(L(t), L(f), L(t), L(t), L(f)).data.any()
    assert fuse(L(f), L(f), L(f), L(f), L(t)).data.all()
    assert fuse(L(t), L(t), L(t), L(t), L(f)).name == "fused"


def test_fuse_cellwise_characterization():
    rng = np.random.default_rng(1)
    layers = [BinaryLayer(SPEC, rng.uniform(size=SPEC.shape) < 0.7) for _ in range(5)]
    out = fuse(*layers).data
    for i in range(20):
        for j in range(20):
            p, n, t, e, tr = (l.data[i, j] for l in layers)
            assert out[i, j] == (tr or (p and n and t and e))


def test_fuse_rejects_mismatched_grids():
    other = GridSpec(0.1, (0.0, 0.0), 20, 21)
    a = BinaryLayer.full(SPEC, True)
    with pytest.raises(GridSpecMismatch):
        fuse(a, a, a, BinaryLayer.full(other, True), a)
