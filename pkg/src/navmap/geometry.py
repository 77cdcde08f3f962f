"""Neighbourhood geometry: radius search, PCA normals, slopes, Euclidean clusters."""

from __future__ import annotations

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree


class NonUnitNormal(ValueError):
    pass


class NeighborIndex:
    """Immutable KD-tree over a 2D or 3D point set with closed-ball radius queries."""

    def __init__(self, points: np.ndarray):
        self.points = np.array(points, dtype=float, copy=True)
        if self.points.ndim != 2 or self.points.shape[1] not in (2, 3):
            raise ValueError("points must have shape (N, 2) or (N, 3)")
        self.points.setflags(write=False)
        self.dim = self.points.shape[1]
        self._tree = cKDTree(self.points) if len(self.points) else None

    def __len__(self):
        return len(self.points)

    def radius(self, p, r: float) -> np.ndarray:
        """Sorted indices of points with ||x - p|| <= r."""
        if self._tree is None:
            return np.zeros(0, dtype=np.int64)
        idx = np.asarray(self._tree.query_ball_point(np.asarray(p, dtype=float), r), dtype=np.int64)
        # cKDTree admits a relative slack; enforce the closed ball exactly
        if len(idx):
            d2 = np.sum((self.points[idx] - p) ** 2, axis=1)
            idx = idx[d2 <= r * r]
        return np.sort(idx)

    def pairs(self, r: float) -> np.ndarray:
        """All unordered index pairs (i < j) within distance r."""
        if self._tree is None:
            return np.zeros((0, 2), dtype=np.int64)
        pairs = self._tree.query_pairs(r, output_type="ndarray")
        if len(pairs):
            d2 = np.sum((self.points[pairs[:, 0]] - self.points[pairs[:, 1]]) ** 2, axis=1)
            pairs = pairs[d2 <= r * r]
        return pairs

    def nearest(self, q: np.ndarray, max_dist: float = np.inf) -> tuple[np.ndarray, np.ndarray]:
        """Nearest index per query, -1 when nothing lies within ``max_dist``."""
        q = np.asarray(q, dtype=float).reshape(-1, self.dim)
        if self._tree is None:
            return np.full(len(q), np.inf), np.full(len(q), -1)
        d, i = self._tree.query(q, distance_upper_bound=max_dist)
        i = np.where(np.isfinite(d), i, -1)
        return d, i

    def nearest_k(self, q: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
        q = np.asarray(q, dtype=float).reshape(-1, self.dim)
        d, i = self._tree.query(q, k=k)
        return np.atleast_2d(d), np.atleast_2d(i)


def _fix_sign(vecs: np.ndarray) -> np.ndarray:
    """Flip each row so its first non-negligible component is positive."""
    vecs = np.atleast_2d(vecs)
    big = np.abs(vecs) > 1e-12
    first = np.argmax(big, axis=1)
    lead = vecs[np.arange(len(vecs)), first]
    return np.where((lead < 0)[:, None], -vecs, vecs)


def _neighbor_moments(points: np.ndarray, index: NeighborIndex, r: float):
    """Counts and covariance of each cloud point's closed r-ball (self included).

    Coordinates are taken relative to the query point before summation to
    avoid cancellation far from the origin.
    """
    n, dim = points.shape
    pairs = index.pairs(r)
    a = np.concatenate([pairs[:, 0], pairs[:, 1]])
    b = np.concatenate([pairs[:, 1], pairs[:, 0]])
    rel = points[b] - points[a]
    count = np.bincount(a, minlength=n) + 1.0
    s1 = np.stack([np.bincount(a, rel[:, k], minlength=n) for k in range(dim)], axis=1)
    s2 = np.empty((n, dim, dim))
    for k in range(dim):
        for m in range(k, dim):
            s2[:, k, m] = s2[:, m, k] = np.bincount(a, rel[:, k] * rel[:, m], minlength=n)
    mean = s1 / count[:, None]
    cov = s2 / count[:, None, None] - mean[:, :, None] * mean[:, None, :]
    return count, cov


def covariance(points: np.ndarray) -> np.ndarray:
    centered = points - points.mean(axis=0)
    return centered.T @ centered / len(points)


def pca_normal(p, index: NeighborIndex, r: float, min_points: int = 3, rank_tol: float = 1e-12):
    """Unit normal at ``p`` from its r-neighbourhood, or None when underdetermined."""
    if not r > 0:
        raise ValueError("radius must be positive")
    p = np.asarray(p, dtype=float)
    nbrs = index.points[index.radius(p, r)]
    if not np.any(np.all(nbrs == p, axis=1)):
        nbrs = np.vstack([nbrs, p])
    if len(nbrs) < min_points:
        return None
    w, v = np.linalg.eigh(covariance(nbrs - p))
    if w[1] < rank_tol:
        return None
    return _fix_sign(v[:, 0])[0]


def estimate_normals(points: np.ndarray, r: float, index: NeighborIndex | None = None,
                     min_points: int = 3, rank_tol: float = 1e-12):
    """PCA normals for every point of a cloud, using the cloud itself as neighbours.

    Returns ``(normals, valid)``; rows where ``valid`` is False are NaN.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    if index is None:
        index = NeighborIndex(points)
    normals = np.full(points.shape, np.nan)
    valid = np.zeros(len(points), dtype=bool)
    if len(points) == 0:
        return normals, valid
    count, cov = _neighbor_moments(points, index, r)
    w, v = np.linalg.eigh(cov)
    ok = (count >= min_points) & (w[:, 1] >= rank_tol)
    normals[ok] = _fix_sign(v[ok, :, 0])
    valid[ok] = True
    return normals, valid


def slope_angle(n) -> float:
    """Unsigned slope in [0, pi/2]: angle to vertical folded so n and -n agree."""
    n = np.asarray(n, dtype=float)
    norm = np.linalg.norm(n)
    if abs(norm - 1.0) > 1e-6:
        raise NonUnitNormal(f"normal has norm {norm}")
    return float(np.arccos(min(abs(n[2]) / norm, 1.0)))


def slope_angles(normals: np.ndarray) -> np.ndarray:
    normals = np.asarray(normals, dtype=float).reshape(-1, 3)
    norm = np.linalg.norm(normals, axis=1)
    return np.arccos(np.minimum(np.abs(normals[:, 2]) / norm, 1.0))


def eigen2d(cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form eigenvalues (lambda_max, lambda_min) of stacked 2x2 covariances."""
    cov = np.asarray(cov).reshape(-1, 2, 2)
    a, b, c = cov[:, 0, 0], cov[:, 0, 1], cov[:, 1, 1]
    half_tr = 0.5 * (a + c)
    disc = np.sqrt((0.5 * (a - c)) ** 2 + b * b)
    lmax = half_tr + disc
    det = a * c - b * b
    # det / lmax avoids the cancellation in half_tr - disc
    with np.errstate(invalid="ignore", divide="ignore"):
        lmin = np.where(lmax > 0, det / lmax, 0.0)
    return lmax, np.maximum(lmin, 0.0)


def pca_eigen2d(p, index: NeighborIndex, r: float):
    """(lambda_max, lambda_min) of the 2D neighbourhood covariance, or None."""
    if not r > 0:
        raise ValueError("radius must be positive")
    p = np.asarray(p, dtype=float)
    nbrs = index.points[index.radius(p, r)]
    if not np.any(np.all(nbrs == p, axis=1)):
        nbrs = np.vstack([nbrs, p])
    if len(nbrs) < 3:
        return None
    lmax, lmin = eigen2d(covariance(nbrs - p))
    return float(lmax[0]), float(lmin[0])


def eigen2d_all(points: np.ndarray, r: float, index: NeighborIndex | None = None, min_points: int = 3):
    """Batched ``pca_eigen2d`` over a 2D cloud; returns (lmax, lmin, valid)."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if index is None:
        index = NeighborIndex(points)
    if len(points) == 0:
        z = np.zeros(0)
        return z, z, np.zeros(0, dtype=bool)
    count, cov = _neighbor_moments(points, index, r)
    lmax, lmin = eigen2d(cov)
    return lmax, lmin, count >= min_points


def euclidean_cluster(points: np.ndarray, tolerance: float, min_size: int = 1,
                      index: NeighborIndex | None = None) -> list[np.ndarray]:
    """Connected components under the 'within tolerance' relation.

    Clusters smaller than ``min_size`` are dropped. Each cluster is a sorted
    index array; clusters are ordered by their smallest member.
    """
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    if min_size < 1:
        raise ValueError("min_size must be >= 1")
    points = np.asarray(points, dtype=float)
    n = len(points)
    if n == 0:
        return []
    labels = cluster_labels(points, tolerance, index)
    order = np.argsort(labels, kind="stable")
    bounds = np.flatnonzero(np.diff(labels[order])) + 1
    groups = np.split(order, bounds)
    groups = [g for g in groups if len(g) >= min_size]
    groups.sort(key=lambda g: g[0])
    return groups


def cluster_labels(points: np.ndarray, tolerance: float, index: NeighborIndex | None = None) -> np.ndarray:
    """Component label per point (labels are arbitrary but deterministic)."""
    if index is None:
        index = NeighborIndex(points)
    n = len(points)
    pairs = index.pairs(tolerance)
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    return labels
