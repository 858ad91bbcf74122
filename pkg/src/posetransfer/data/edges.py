"""Edge-map extraction: luminance conversion and XDoG stylization.

All functions are pure and deterministic: the same image and parameters give
bit-identical output, which the edge cache relies on.
"""

from __future__ import annotations

import math

import numpy as np

from ..config import XdogParams

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


def rgb_to_luminance(image: np.ndarray) -> np.ndarray:
    """Collapse a 3xHxW image in [-1, 1] to 1xHxW luminance in [0, 1]."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[0] != 3:
        raise ValueError(f"expected a 3xHxW image, got shape {image.shape}")
    rescaled = (image.astype(np.float64) + 1.0) / 2.0
    luma = (
        LUMA_WEIGHTS[0] * rescaled[0]
        + LUMA_WEIGHTS[1] * rescaled[1]
        + LUMA_WEIGHTS[2] * rescaled[2]
    )
    return luma[None].astype(np.float32)


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian with kernel radius ceil(3*sigma)."""
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(xs**2) / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def gaussian_blur(image: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur of a 2-D array with reflect padding."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {image.shape}")
    kernel = gaussian_kernel1d(sigma)
    radius = len(kernel) // 2
    if radius >= min(image.shape):
        raise ValueError(
            f"blur radius {radius} too large for image of shape {image.shape}"
        )
    # correlate rows then columns
    padded = np.pad(image, ((0, 0), (radius, radius)), mode="reflect")
    rows = sum(weight * padded[:, i : i + image.shape[1]] for i, weight in enumerate(kernel))
    padded = np.pad(rows, ((radius, radius), (0, 0)), mode="reflect")
    cols = sum(weight * padded[i : i + image.shape[0], :] for i, weight in enumerate(kernel))
    return cols


def xdog_edge(gray: np.ndarray, params: XdogParams) -> np.ndarray:
    """Stylized edge map of a single-channel luminance image.

    The sharpened two-scale response is S = (1+p)*G_sigma - p*G_{k*sigma};
    output pixels are 1 where S >= epsilon and 1 + tanh(phi*(S - epsilon))
    elsewhere, clamped to [0, 1].
    """
    gray = np.asarray(gray)
    if gray.ndim == 3:
        if gray.shape[0] != 1:
            raise ValueError(f"expected single-channel input, got shape {gray.shape}")
        gray = gray[0]
    if gray.ndim != 2:
        raise ValueError(f"expected 1xHxW or HxW input, got shape {gray.shape}")
    if not np.isfinite(gray).all():
        raise ValueError("input image contains non-finite values")
    params.validate()

    gray = gray.astype(np.float64)
    fine = gaussian_blur(gray, params.sigma)
    coarse = gaussian_blur(gray, params.k * params.sigma)
    response = (1.0 + params.p) * fine - params.p * coarse
    soft = 1.0 + np.tanh(params.phi * (response - params.epsilon))
    edges = np.where(response >= params.epsilon, 1.0, soft)
    return np.clip(edges, 0.0, 1.0)[None].astype(np.float32)
