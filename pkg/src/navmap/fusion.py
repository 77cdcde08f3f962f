"""Trajectory footprint layer and final layer fusion."""

from __future__ import annotations

import numpy as np

from .core import BinaryLayer, GridSpec, Trajectory, layer_and, layer_or


def trajectory_footprint_layer(trajectory: Trajectory, radius: float, spec: GridSpec) -> BinaryLayer:
    """Cells whose center lies within ``radius`` (xy) of at least one pose."""
    if not radius > 0:
        raise ValueError("footprint radius must be positive")
    mask = np.zeros(spec.shape, dtype=bool)
    l = spec.resolution
    for x, y, _ in trajectory.xyz:
        i0 = max(int(np.floor((x - radius - spec.origin[0]) / l)), 0)
        i1 = min(int(np.floor((x + radius - spec.origin[0]) / l)), spec.width - 1)
        j0 = max(int(np.floor((y - radius - spec.origin[1]) / l)), 0)
        j1 = min(int(np.floor((y + radius - spec.origin[1]) / l)), spec.height - 1)
        if i1 < i0 or j1 < j0:
            continue
        xs = spec.origin[0] + (np.arange(i0, i1 + 1) + 0.5) * l
        ys = spec.origin[1] + (np.arange(j0, j1 + 1) + 0.5) * l
        inside = (xs[:, None] - x) ** 2 + (ys[None, :] - y) ** 2 <= radius * radius
        mask[i0:i1 + 1, j0:j1 + 1] |= inside
    return BinaryLayer(spec, mask, "trajectory")


def fuse(m_pos: BinaryLayer, m_neg: BinaryLayer, m_trav: BinaryLayer, m_expl: BinaryLayer,
         traj_layer: BinaryLayer) -> BinaryLayer:
    fused = layer_or(layer_and([m_pos, m_neg, m_trav, m_expl]), traj_layer)
    fused.name = "fused"
    return fused
