"""
Image quality metrics on Y-channel images in [0, 1].

Metrics are computed on full images without border cropping.
"""

import math
from typing import Tuple

import numpy as np
from skimage.metrics import structural_similarity

from lfdfnet.exceptions import LightFieldShapeError

DATA_RANGE = 1.0
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
# 11 x 11 window of the sigma = 1.5 Gaussian (truncated at 3.5 sigma)
SSIM_WIN_SIZE = 11


def _as_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise LightFieldShapeError(f"Images differ in shape: {a.shape} vs {b.shape}")
    return a, b


def ssim_window(height: int, width: int) -> Tuple[int, float]:
    """
    The Gaussian SSIM window for an image: 11x11 with sigma 1.5, or the largest odd size that fits.

    A shrunk window keeps the same truncation (3.5 sigma), so its sigma scales with its size.
    """
    size = min(SSIM_WIN_SIZE, height, width)
    if size % 2 == 0:
        size -= 1
    if size < 3:
        raise LightFieldShapeError(f"SSIM needs images of at least 3x3, got {height}x{width}")
    return size, SSIM_SIGMA * size / SSIM_WIN_SIZE


def psnr_y(a: np.ndarray, b: np.ndarray) -> float:
    """``10 * log10(1 / MSE)`` in dB; identical images give ``math.inf``."""
    a, b = _as_pair(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(DATA_RANGE**2 / mse)


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """
    Mean local SSIM with an 11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03 and a dynamic range of 1.

    Images smaller than the window are scored with the window of :func:`ssim_window`.
    """
    a, b = _as_pair(a, b)
    if a.ndim == 3 and a.shape[-1] == 1:
        a, b = a[..., 0], b[..., 0]
    if a.ndim != 2:
        raise LightFieldShapeError(f"SSIM takes single-channel 2D images, got shape {a.shape}")
    win_size, sigma = ssim_window(*a.shape)
    return float(
        structural_similarity(
            a,
            b,
            data_range=DATA_RANGE,
            gaussian_weights=True,
            win_size=win_size,
            sigma=sigma,
            use_sample_covariance=False,
            K1=SSIM_K1,
            K2=SSIM_K2,
        )
    )
