from fractions import Fraction
from typing import Tuple, Union

import numpy as np
import torch
import torch.nn.functional as F

from lfdfnet.exceptions import LightFieldShapeError

Scale = Union[int, float, Fraction]
ImageLike = Union[np.ndarray, torch.Tensor]


def _as_fraction(scale: Scale) -> Fraction:
    fraction = Fraction(scale).limit_denominator(1000) if isinstance(scale, float) else Fraction(scale)
    if fraction <= 0:
        raise LightFieldShapeError(f"The resize scale must be positive, got {scale}")
    return fraction


def output_size(height: int, width: int, scale: Scale) -> Tuple[int, int]:
    fraction = _as_fraction(scale)
    out_h, out_w = height * fraction, width * fraction
    if out_h.denominator != 1 or out_w.denominator != 1:
        raise LightFieldShapeError(
            f"Resizing {height}x{width} by {scale} gives the non-integral size {float(out_h)}x{float(out_w)}"
        )
    if out_h < 1 or out_w < 1:
        raise LightFieldShapeError(f"Resizing {height}x{width} by {scale} gives an empty image")
    return int(out_h), int(out_w)


def resize_bicubic(
    img: ImageLike,
    scale: Scale,
    antialias: bool = True,
    clamp: bool = True,
    value_range: Tuple[float, float] = (0.0, 1.0),
) -> ImageLike:
    """
    Bicubic resize of the last two axes of ``img`` (``[..., H, W]``).

    The kernel is Keys' cubic with ``a = -0.5``; on downscale the kernel support is stretched by ``1 / scale``
    (antialiasing) and the taps falling outside the image are dropped with the remaining weights renormalised,
    so a constant image is reproduced exactly. The torch engine returns the type it was given.

    Args:
        img: numpy array or torch tensor with at least two dimensions.
        scale: output / input size ratio; ``H * scale`` and ``W * scale`` must be integers.
        antialias: must stay on when downscaling.
        clamp: clip the result to ``value_range``; turned off to study the linear map itself.
        value_range: the closed interval the result is clipped to.
    """
    if img.ndim < 2:
        raise LightFieldShapeError(f"resize_bicubic expects a [..., H, W] image, got shape {tuple(img.shape)}")
    fraction = _as_fraction(scale)
    if fraction < 1 and not antialias:
        raise LightFieldShapeError("Downscaling without antialiasing is not supported")

    height, width = img.shape[-2:]
    out_h, out_w = output_size(height, width, fraction)

    is_numpy = isinstance(img, np.ndarray)
    tensor = torch.from_numpy(np.ascontiguousarray(img)) if is_numpy else img
    if not tensor.is_floating_point():
        tensor = tensor.to(torch.float64)

    if (out_h, out_w) == (height, width):
        resized = tensor.clone()
    else:
        lead_shape = tensor.shape[:-2]
        # The aa kernel path is Keys a=-0.5 for both directions, the plain bicubic path is a=-0.75
        resized = F.interpolate(
            tensor.reshape(-1, 1, height, width),
            size=(out_h, out_w),
            mode="bicubic",
            align_corners=False,
            antialias=True,
        ).reshape(*lead_shape, out_h, out_w)

    if clamp:
        resized = resized.clamp(*value_range)

    return resized.numpy() if is_numpy else resized
