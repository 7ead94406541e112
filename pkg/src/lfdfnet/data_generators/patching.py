from typing import List, Tuple

import numpy as np

from lfdfnet.data_generators.light_field import LightField
from lfdfnet.data_generators.resize import resize_bicubic
from lfdfnet.exceptions import LightFieldShapeError


def patch_windows(height: int, width: int, size: int, stride: int) -> List[Tuple[int, int]]:
    """
    Top-left origins of the ``size x size`` windows tiling an ``height x width`` image in raster order.

    Windows that would run over the border are dropped rather than padded.

    Example:
        >>> patch_windows(65, 65, 32, 32)
        [(0, 0), (0, 32), (32, 0), (32, 32)]
    """
    if size < 1 or stride < 1:
        raise LightFieldShapeError(f"Patch size and stride must be positive, got size={size} stride={stride}")
    if size > height or size > width:
        raise LightFieldShapeError(f"Patch size {size} exceeds the spatial extent {height}x{width}")
    tops = range(0, height - size + 1, stride)
    lefts = range(0, width - size + 1, stride)
    return [(top, left) for top in tops for left in lefts]


def extract_patches(lf: LightField, size: int, stride: int) -> List[LightField]:
    height, width = lf.spatial_shape
    return [
        lf.with_data(lf.data[:, :, top : top + size, left : left + size].copy())
        for top, left in patch_windows(height, width, size, stride)
    ]


def degrade(lf_hr: LightField, alpha: int) -> LightField:
    """Bicubic ``1 / alpha`` downscale of every view (antialiased), the low-resolution input of the network."""
    if alpha < 1:
        raise LightFieldShapeError(f"The scale factor must be a positive integer, got {alpha}")
    height, width = lf_hr.spatial_shape
    if height % alpha or width % alpha:
        raise LightFieldShapeError(f"Spatial size {height}x{width} is not divisible by the scale factor {alpha}")
    if alpha == 1:
        return lf_hr.with_data(lf_hr.data.copy())

    # [U, V, H, W, C] -> [U, V, C, H, W] so the resize runs over the trailing spatial axes
    channels_first = np.moveaxis(lf_hr.data, -1, 2)
    low = resize_bicubic(channels_first, 1 / alpha, antialias=True, clamp=True, value_range=lf_hr.value_range)
    return lf_hr.with_data(np.ascontiguousarray(np.moveaxis(low, 2, -1)).astype(lf_hr.data.dtype, copy=False))
