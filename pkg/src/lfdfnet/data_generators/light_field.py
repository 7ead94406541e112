"""
The 4D light field data model.

A light field is stored as a ``[U, V, H, W, C]`` array: ``U x V`` sub-aperture images (SAIs) of ``H x W``
pixels with ``C`` channels. Every transform in this module is a pure function returning a new
:class:`LightField`; the reorganisations (SAI grid, macro-pixel image) are lossless index permutations.
"""

import dataclasses
from enum import Enum
from typing import List, Tuple

import numpy as np

from lfdfnet.exceptions import ColorSpaceError, LightFieldShapeError

# Full-range BT.601 (JPEG / JFIF) conversion, chroma centred on 0.5 for [0, 1] data
RGB_TO_YCBCR = np.array(
    [
        [0.299, 0.587, 0.114],
        [-0.168735892, -0.331264108, 0.5],
        [0.5, -0.418687589, -0.081312411],
    ],
    dtype=np.float64,
)
YCBCR_TO_RGB = np.linalg.inv(RGB_TO_YCBCR)
CHROMA_OFFSET = np.array([0.0, 0.5, 0.5], dtype=np.float64)


class ColorSpace(Enum):
    RGB = "RGB"
    YCBCR = "YCbCr"
    Y = "Y"


@dataclasses.dataclass(frozen=True)
class LightField:
    data: np.ndarray
    color_space: ColorSpace = ColorSpace.Y
    value_range: Tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if self.data.ndim != 5:
            raise LightFieldShapeError(f"A light field must be a [U, V, H, W, C] array, got shape {self.data.shape}")
        u, v, h, w, c = self.data.shape
        if min(u, v, h, w) < 1:
            raise LightFieldShapeError(f"Every light field dimension must be positive, got shape {self.data.shape}")
        if c not in (1, 3):
            raise LightFieldShapeError(f"A light field has 1 or 3 channels, got {c}")
        expected_channels = 1 if self.color_space == ColorSpace.Y else 3
        if c != expected_channels:
            raise ColorSpaceError(f"Color space {self.color_space.value} expects {expected_channels} channels, got {c}")

    @property
    def angular_shape(self) -> Tuple[int, int]:
        return self.data.shape[0], self.data.shape[1]

    @property
    def spatial_shape(self) -> Tuple[int, int]:
        return self.data.shape[2], self.data.shape[3]

    @property
    def channels(self) -> int:
        return self.data.shape[4]

    @property
    def center_index(self) -> Tuple[int, int]:
        u, v = self.angular_shape
        return u // 2, v // 2

    @property
    def center_view(self) -> np.ndarray:
        u_c, v_c = self.center_index
        return self.data[u_c, v_c]

    def validate(self) -> "LightField":
        """Checks the value invariants (finite, inside value_range) which are too costly for __post_init__."""
        if not np.all(np.isfinite(self.data)):
            raise ValueError("The light field contains non-finite values")
        low, high = self.value_range
        if self.data.min() < low or self.data.max() > high:
            raise ValueError(
                f"Values [{self.data.min()}, {self.data.max()}] leave the value range {self.value_range}"
            )
        return self

    def with_data(self, data: np.ndarray, color_space: ColorSpace = None) -> "LightField":
        return LightField(
            data=data,
            color_space=self.color_space if color_space is None else color_space,
            value_range=self.value_range,
        )


@dataclasses.dataclass(frozen=True)
class SAIGrid:
    """A ``U x V`` nested list of ``H x W x C`` views sharing storage with nothing (copies)."""

    views: List[List[np.ndarray]]
    color_space: ColorSpace = ColorSpace.Y


@dataclasses.dataclass(frozen=True)
class MacroPixelImage:
    """
    Macro-pixel interleaving: pixel ``(h, w)`` of view ``(u, v)`` sits at ``(h * U + u, w * V + v)``.

    The angular size is carried along so the reorganisation can be inverted.
    """

    data: np.ndarray
    angular_shape: Tuple[int, int]
    color_space: ColorSpace = ColorSpace.Y


def to_sai_grid(lf: LightField) -> SAIGrid:
    u, v = lf.angular_shape
    return SAIGrid(views=[[lf.data[i, j].copy() for j in range(v)] for i in range(u)], color_space=lf.color_space)


def from_sai_grid(grid: SAIGrid) -> LightField:
    data = np.stack([np.stack(row, axis=0) for row in grid.views], axis=0)
    return LightField(data=data, color_space=grid.color_space)


def to_macro_pixel(lf: LightField) -> MacroPixelImage:
    u, v, h, w, c = lf.data.shape
    # [U, V, H, W, C] -> [H, U, W, V, C] -> [H*U, W*V, C]
    data = lf.data.transpose(2, 0, 3, 1, 4).reshape(h * u, w * v, c)
    return MacroPixelImage(data=data, angular_shape=(u, v), color_space=lf.color_space)


def from_macro_pixel(mpi: MacroPixelImage) -> LightField:
    u, v = mpi.angular_shape
    hu, wv, c = mpi.data.shape
    if hu % u or wv % v:
        raise LightFieldShapeError(f"Macro-pixel image {mpi.data.shape} is not divisible by the angular size {(u, v)}")
    data = mpi.data.reshape(hu // u, u, wv // v, v, c).transpose(1, 3, 0, 2, 4)
    return LightField(data=np.ascontiguousarray(data), color_space=mpi.color_space)


def crop_angular(lf: LightField, a: int) -> LightField:
    """Keeps the central ``a x a`` views, e.g. the 5x5 views {2..6} x {2..6} of a 9x9 light field."""
    u, v = lf.angular_shape
    if a < 1 or a > min(u, v):
        raise LightFieldShapeError(f"Cannot crop {a}x{a} views out of a {u}x{v} light field")
    if (u - a) % 2 or (v - a) % 2:
        raise LightFieldShapeError(f"A central {a}x{a} crop of a {u}x{v} light field is not symmetric")
    top, left = (u - a) // 2, (v - a) // 2
    return lf.with_data(lf.data[top : top + a, left : left + a].copy())


def crop_spatial_to_multiple(lf: LightField, alpha: int) -> LightField:
    h, w = lf.spatial_shape
    h_new, w_new = (h // alpha) * alpha, (w // alpha) * alpha
    if h_new == 0 or w_new == 0:
        raise LightFieldShapeError(f"Spatial size {(h, w)} is smaller than the scale factor {alpha}")
    if (h_new, w_new) == (h, w):
        return lf
    return lf.with_data(lf.data[:, :, :h_new, :w_new].copy())


def rgb_to_ycbcr(lf: LightField) -> LightField:
    if lf.color_space != ColorSpace.RGB:
        raise ColorSpaceError(f"rgb_to_ycbcr expects an RGB light field, got {lf.color_space.value}")
    ycbcr = lf.data @ RGB_TO_YCBCR.T + CHROMA_OFFSET
    return lf.with_data(np.clip(ycbcr, *lf.value_range), color_space=ColorSpace.YCBCR)


def ycbcr_to_rgb(lf: LightField) -> LightField:
    if lf.color_space != ColorSpace.YCBCR:
        raise ColorSpaceError(f"ycbcr_to_rgb expects a YCbCr light field, got {lf.color_space.value}")
    rgb = (lf.data - CHROMA_OFFSET) @ YCBCR_TO_RGB.T
    return lf.with_data(np.clip(rgb, *lf.value_range), color_space=ColorSpace.RGB)


def rgb_to_y(lf: LightField) -> LightField:
    if lf.color_space != ColorSpace.RGB:
        raise ColorSpaceError(f"rgb_to_y expects an RGB light field, got {lf.color_space.value}")
    y = lf.data @ RGB_TO_YCBCR[0]
    return lf.with_data(np.clip(y, *lf.value_range)[..., None], color_space=ColorSpace.Y)


def split_luma_chroma(lf: LightField) -> Tuple[LightField, np.ndarray]:
    """Returns the Y light field and the ``[U, V, H, W, 2]`` Cb/Cr planes kept for the bicubic path."""
    ycbcr = rgb_to_ycbcr(lf)
    luma = LightField(data=ycbcr.data[..., :1].copy(), color_space=ColorSpace.Y, value_range=lf.value_range)
    return luma, ycbcr.data[..., 1:].copy()


def merge_luma_chroma(luma: LightField, chroma: np.ndarray) -> LightField:
    if luma.color_space != ColorSpace.Y:
        raise ColorSpaceError(f"merge_luma_chroma expects a Y light field, got {luma.color_space.value}")
    if chroma.shape[:4] != luma.data.shape[:4] or chroma.shape[4] != 2:
        raise LightFieldShapeError(f"Chroma planes {chroma.shape} do not match the luma light field {luma.data.shape}")
    ycbcr = LightField(
        data=np.concatenate([luma.data, chroma], axis=-1), color_space=ColorSpace.YCBCR, value_range=luma.value_range
    )
    return ycbcr_to_rgb(ycbcr)
