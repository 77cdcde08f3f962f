"""Synthetic scenes with simulated LiDAR scans and exact ground truth."""

from .generate import GroundTruth, PathOutsideScene, generate_dataset, ground_truth, sample_path, scene_grid
from .lidar import LidarModel, raycast_scan
from .presets import PRESETS, Preset, load_preset
from .scene import Box, Cylinder, Ramp, SceneSpec, Step, Terrain, TerrainRegion

__all__ = [
    "Box", "Cylinder", "GroundTruth", "LidarModel", "PRESETS", "PathOutsideScene", "Preset",
    "Ramp", "SceneSpec", "Step", "Terrain", "TerrainRegion", "generate_dataset", "ground_truth",
    "load_preset", "raycast_scan", "sample_path", "scene_grid",
]
