"""Colour-coded composite of the fused map by vetoing layer."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import BinaryLayer

# label -> (name, rgb); earlier vetoes take priority
PALETTE = (
    ("traversable", (46, 160, 67)),
    ("positive", (215, 48, 39)),
    ("negative", (118, 42, 131)),
    ("traversability", (244, 165, 36)),
    ("unexplored", (150, 150, 150)),
)
VETO_ORDER = ("positive", "negative", "traversable", "explored")


def veto_labels(layers: dict) -> np.ndarray:
    """Per-cell label index into ``PALETTE``.

    Fused-true cells get 0; other cells get the first layer in ``VETO_ORDER``
    that is false there.
    """
    fused = layers["fused"]
    labels = np.zeros(fused.spec.shape, dtype=np.uint8)
    open_ = ~fused.data
    for k, name in enumerate(VETO_ORDER, start=1):
        layer = layers[name]
        fused.spec.check_same(layer.spec)
        hit = open_ & ~layer.data
        labels[hit] = k
        open_ &= ~hit
    # fused-false with every layer true cannot happen; keep it visible as unexplored
    labels[open_] = len(PALETTE) - 1
    return labels


def palette_comment() -> str:
    return "palette " + " ".join(f"{name}=#{r:02x}{g:02x}{b:02x}" for name, (r, g, b) in PALETTE)


def write_ppm(path, labels: np.ndarray):
    """Binary P6 image, top row = largest j, with the palette in a header comment."""
    rgb = np.array([c for _, c in PALETTE], dtype=np.uint8)[labels.T[::-1]]
    h, w = rgb.shape[:2]
    with open(Path(path), "wb") as f:
        f.write(f"P6\n# {palette_comment()}\n{w} {h}\n255\n".encode("ascii"))
        f.write(rgb.tobytes())


def render_layers(layers: dict[str, BinaryLayer], path) -> np.ndarray:
    labels = veto_labels(layers)
    write_ppm(path, labels)
    return labels
