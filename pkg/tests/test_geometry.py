import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from navmap.geometry import (NeighborIndex, NonUnitNormal, eigen2d_all, estimate_normals, euclidean_cluster,
                             pca_eigen2d, pca_normal, slope_angle, slope_angles)


def _linear_scan(points, p, r):
    return {i for i, q in enumerate(points) if np.sqrt(np.sum((q - p) ** 2)) <= r}


@pytest.mark.parametrize("dim", [2, 3])
def test_radius_search_matches_linear_scan(dim):
    rng = np.random.default_rng(dim)
    pts = rng.uniform(0, 1, size=(1000, dim))
    index = NeighborIndex(pts)
    for p in rng.uniform(0, 1, size=(40, dim)):
        for r in (0.02, 0.1, 0.3):
            assert set(index.radius(p, r).tolist()) == _linear_scan(pts, p, r)
    # points exactly on the sphere boundary are inside the closed ball
    grid = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])[:, :dim] if dim == 2 else \
        np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    assert set(NeighborIndex(grid).radius(grid[0], 1.0).tolist()) == _linear_scan(grid, grid[0], 1.0)


def test_pca_normal_planes():
    xs = np.linspace(-0.3, 0.3, 13)
    X, Y = np.meshgrid(xs, xs)
    flat = np.column_stack([X.ravel(), Y.ravel(), np.zeros(X.size)])
    n = pca_normal([0, 0, 0], NeighborIndex(flat), 0.25)
    assert abs(abs(n[2]) - 1) < 1e-6
    incl = np.column_stack([X.ravel(), Y.ravel(), Y.ravel()])
    n = pca_normal([0, 0, 0], NeighborIndex(incl), 0.25)
    expect = np.array([0, -np.sqrt(2) / 2, np.sqrt(2) / 2])
    assert min(np.abs(n - expect).max(), np.abs(n + expect).max()) < 1e-6


def test_pca_normal_matches_covariance_oracle():
    rng = np.random.default_rng(7)
    for trial in range(20):
        pts = rng.uniform(-1, 1, size=(300, 3))
        a, b = rng.normal(size=2) * 0.3
        pts[:, 2] = a * pts[:, 0] + b * pts[:, 1] + rng.normal(0, 0.02, 300)
        index = NeighborIndex(pts)
        p = pts[trial]
        n = pca_normal(p, index, 0.5)
        # oracle: explicit neighbour loop, np.cov, general eigen solver
        nb = np.array([q for q in pts if np.linalg.norm(q - p) <= 0.5])
        c = np.cov(nb.T, bias=True)
        w, v = np.linalg.eig(c)
        ref = np.real(v[:, np.argmin(np.real(w))])
        assert abs(abs(n @ ref) - 1) < 1e-6


def test_pca_normal_degenerate():
    index = NeighborIndex(np.array([[0, 0, 0], [0.1, 0, 0.0]]))
    assert pca_normal([0, 0, 0], index, 0.5) is None
    line = NeighborIndex(np.column_stack([np.linspace(0, 1, 10), np.zeros(10), np.zeros(10)]))
    assert pca_normal([0.5, 0, 0], line, 0.5) is None
    with pytest.raises(ValueError):
        pca_normal([0, 0, 0], index, 0)


def test_pca_normal_query_point_counted_once():
    # three cloud points; querying one of them must not duplicate it
    pts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0.0]])
    assert pca_normal(pts[0], NeighborIndex(pts), 2.0) is not None
    assert pca_normal(pts[0], NeighborIndex(pts[1:]), 2.0) is not None
    assert pca_normal(pts[0], NeighborIndex(pts[1:2]), 2.0) is None


def test_pca_normal_rigid_equivariance():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-1, 1, size=(200, 3))
    pts[:, 2] = 0.4 * pts[:, 0] + rng.normal(0, 0.03, 200)
    rot = Rotation.from_rotvec([0.3, -0.7, 1.1]).as_matrix()
    t = np.array([5.0, -2.0, 10.0])
    moved = pts @ rot.T + t
    for k in range(10):
        n0 = pca_normal(pts[k], NeighborIndex(pts), 0.6)
        n1 = pca_normal(moved[k], NeighborIndex(moved), 0.6)
        assert abs(abs((rot @ n0) @ n1) - 1) < 1e-6


def test_estimate_normals_agrees_with_pointwise():
    rng = np.random.default_rng(11)
    pts = rng.uniform(0, 1, size=(150, 3)) * [1, 1, 0.1]
    normals, valid = estimate_normals(pts, 0.3)
    index = NeighborIndex(pts)
    for k in range(len(pts)):
        n = pca_normal(pts[k], index, 0.3)
        assert (n is not None) == valid[k]
        if n is not None:
            assert abs(abs(n @ normals[k]) - 1) < 1e-9


def test_slope_angle_examples():
    assert slope_angle([0, 0, 1]) == 0
    assert slope_angle([0, 0, -1]) == 0
    assert abs(slope_angle([1, 0, 0]) - np.pi / 2) < 1e-15
    with pytest.raises(NonUnitNormal):
        slope_angle([0, 0, 2])


def test_slope_angle_fold_exact():
    rng = np.random.default_rng(5)
    v = rng.normal(size=(1000, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    for n in v:
        assert slope_angle(n) == slope_angle(-n)
        assert 0 <= slope_angle(n) <= np.pi / 2
    assert np.array_equal(slope_angles(v), slope_angles(-v))


def test_eigen2d_examples():
    line = np.column_stack([np.linspace(0, 1, 21), np.linspace(0, 0.5, 21)])
    lmax, lmin = pca_eigen2d(line[10], NeighborIndex(line), 0.3)
    assert lmin < 1e-12 and lmax > 0
    xs = np.arange(-5, 6) * 0.05
    X, Y = np.meshgrid(xs, xs)
    grid = np.column_stack([X.ravel(), Y.ravel()])
    lmax, lmin = pca_eigen2d([0, 0], NeighborIndex(grid), 0.2)
    assert abs(lmax / lmin - 1) < 0.05
    assert pca_eigen2d([0, 0], NeighborIndex(np.array([[0.0, 0.0], [0.1, 0.0]])), 0.3) is None


def test_eigen2d_noise_monotone():
    rng = np.random.default_rng(9)
    x = np.linspace(-0.3, 0.3, 61)
    base = rng.normal(size=61)
    lmins = []
    for sigma in (0.001, 0.005, 0.02):
        pts = np.column_stack([x, sigma * base])
        lmins.append(pca_eigen2d([0, 0], NeighborIndex(pts), 0.3)[1])
    assert lmins[0] < lmins[1] < lmins[2]


def test_eigen2d_all_matches_pointwise():
    rng = np.random.default_rng(2)
    pts = rng.uniform(0, 1, size=(200, 2))
    lmax, lmin, valid = eigen2d_all(pts, 0.12)
    index = NeighborIndex(pts)
    for k in range(len(pts)):
        ref = pca_eigen2d(pts[k], index, 0.12)
        assert (ref is not None) == valid[k]
        if ref is not None:
            assert np.allclose([lmax[k], lmin[k]], ref, rtol=1e-9, atol=1e-15)


def test_cluster_examples():
    d = 0.2
    a = np.random.default_rng(0).uniform(0, 0.1, size=(10, 3))
    two = np.vstack([a, a + [10 * d, 0, 0]])
    assert len(euclidean_cluster(two, d)) == 2
    chain = np.column_stack([np.arange(30) * 0.9 * d, np.zeros(30), np.zeros(30)])
    assert len(euclidean_cluster(chain, d)) == 1
    pts = np.random.default_rng(1).uniform(0, 3, size=(200, 3))
    clusters = euclidean_cluster(pts, 0.3, 1)
    allidx = np.concatenate(clusters)
    assert sorted(allidx.tolist()) == list(range(200))
    assert [c[0] for c in clusters] == sorted(c[0] for c in clusters)
    with pytest.raises(ValueError):
        euclidean_cluster(pts, 0)
    with pytest.raises(ValueError):
        euclidean_cluster(pts, 0.1, 0)


def test_cluster_min_size_and_order_invariance():
    rng = np.random.default_rng(4)
    pts = rng.uniform(0, 4, size=(300, 3))
    base = {frozenset(c.tolist()) for c in euclidean_cluster(pts, 0.35, 3)}
    assert all(len(c) >= 3 for c in base)
    perm = rng.permutation(len(pts))
    shuffled = euclidean_cluster(pts[perm], 0.35, 3)
    assert {frozenset(perm[c].tolist()) for c in shuffled} == base


def test_pca_normal_sign_convention():
    rng = np.random.default_rng(12)
    for _ in range(20):
        pts = rng.uniform(-1, 1, size=(100, 3))
        pts[:, 2] = pts[:, :2] @ rng.normal(0, 1, 2)
        n = pca_normal(pts[0], NeighborIndex(pts), 0.8)
        first = n[np.flatnonzero(np.abs(n) > 1e-12)[0]]
        assert first > 0
