"""Rasterize joint annotations into multi-channel Gaussian heatmaps."""

from __future__ import annotations

import numpy as np

from .keypoints import JOINT_NAMES, NUM_JOINTS, Keypoints


class KeypointOutOfBounds(ValueError):
    """A visible joint lies outside the raster; the pair should be rejected."""


def rasterize_pose_heatmap(kp: Keypoints, height: int, width: int, sigma: float) -> np.ndarray:
    """Render one Gaussian bump per visible joint.

    Channel j holds exp(-((h-y_j)^2 + (w-x_j)^2) / (2 sigma^2)) for a visible
    joint j and zeros otherwise. For integer joint coordinates the channel
    peaks at exactly 1.0 on the joint pixel.
    """
    if height <= 0 or width <= 0:
        raise ValueError(f"heatmap dims must be positive, got {height}x{width}")
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")

    heatmap = np.zeros((NUM_JOINTS, height, width), dtype=np.float32)
    ys = np.arange(height, dtype=np.float64)[:, None]
    xs = np.arange(width, dtype=np.float64)[None, :]
    for j in range(NUM_JOINTS):
        if not kp.visible[j]:
            continue
        x, y = float(kp.x[j]), float(kp.y[j])
        if not (0 <= x < width and 0 <= y < height):
            raise KeypointOutOfBounds(
                f"joint {j} ({JOINT_NAMES[j]}) at ({x:.1f}, {y:.1f}) is outside {width}x{height}"
            )
        sq = (ys - y) ** 2 + (xs - x) ** 2
        heatmap[j] = np.exp(-sq / (2.0 * sigma * sigma)).astype(np.float32)
    return heatmap
