"""Traversability mapping for ground robots from 3D LiDAR scans."""

__version__ = "0.1.0"
