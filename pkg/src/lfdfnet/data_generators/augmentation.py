"""
Joint spatial-angular symmetries of a light field.

Flipping or rotating only the views would break the epipolar geometry, so every spatial transform is
applied together with the matching angular one:

* ``flip_h`` mirrors the horizontal axes (``V`` and ``W``),
* ``flip_v`` mirrors the vertical axes (``U`` and ``H``),
* ``rot90`` rotates ``(U, V)`` and ``(H, W)`` by the same quarter turns.

Flips are applied first (horizontal, then vertical), then the rotation. The 8 distinct results form the
dihedral group used for training-time augmentation.
"""

from typing import List, NamedTuple, Sequence, Union

import numpy as np
import torch

from lfdfnet.data_generators.light_field import LightField
from lfdfnet.exceptions import LightFieldShapeError

ArrayLike = Union[np.ndarray, torch.Tensor]


class Symmetry(NamedTuple):
    flip_h: bool = False
    flip_v: bool = False
    rot90: int = 0

    @property
    def is_identity(self) -> bool:
        return self.canonical() == IDENTITY

    def canonical(self) -> "Symmetry":
        return _find_symmetry(_apply_to_marker(self))

    def inverse(self) -> "Symmetry":
        for candidate in ALL_SYMMETRIES:
            if compose(self, candidate) == IDENTITY:
                return candidate
        raise AssertionError(f"{self} has no inverse in the dihedral group")


IDENTITY = Symmetry(False, False, 0)
# flip_v is redundant (flip_v == flip_h followed by a half turn) so the group is enumerated without it
ALL_SYMMETRIES: List[Symmetry] = [Symmetry(flip_h, False, rot) for flip_h in (False, True) for rot in range(4)]

# Four distinct values identify every element of the dihedral group
_MARKER = np.arange(4).reshape(1, 1, 2, 2)


def _flip(data: ArrayLike, axes: Sequence[int]) -> ArrayLike:
    if isinstance(data, torch.Tensor):
        return torch.flip(data, dims=list(axes))
    return np.flip(data, axis=tuple(axes))


def _rot90(data: ArrayLike, k: int, axes: Sequence[int]) -> ArrayLike:
    if isinstance(data, torch.Tensor):
        return torch.rot90(data, k, dims=list(axes))
    return np.rot90(data, k, axes=tuple(axes))


def apply_symmetry(
    data: Union[LightField, ArrayLike],
    symmetry: Symmetry,
    angular_axes: Sequence[int] = (0, 1),
    spatial_axes: Sequence[int] = (2, 3),
) -> Union[LightField, ArrayLike]:
    """
    Applies ``symmetry`` to a light field or to a raw ``[U, V, H, W, ...]`` array / tensor.

    The axis arguments allow batched layouts such as ``[B, U, V, H, W]`` (``angular_axes=(1, 2)``,
    ``spatial_axes=(3, 4)``).
    """
    if isinstance(data, LightField):
        return data.with_data(np.ascontiguousarray(apply_symmetry(data.data, symmetry, angular_axes, spatial_axes)))

    u_axis, v_axis = angular_axes
    h_axis, w_axis = spatial_axes
    rotation = symmetry.rot90 % 4
    if rotation % 2 and data.shape[u_axis] != data.shape[v_axis]:
        raise LightFieldShapeError(
            f"A quarter-turn rotation needs a square angular array, got {data.shape[u_axis]}x{data.shape[v_axis]}"
        )

    out = data
    if symmetry.flip_h:
        out = _flip(out, (v_axis, w_axis))
    if symmetry.flip_v:
        out = _flip(out, (u_axis, h_axis))
    if rotation:
        out = _rot90(out, rotation, (u_axis, v_axis))
        out = _rot90(out, rotation, (h_axis, w_axis))
    return out


def augment(lf: LightField, flip_h: bool = False, flip_v: bool = False, rot90: int = 0) -> LightField:
    u, v = lf.angular_shape
    if rot90 % 4 and u != v:
        raise LightFieldShapeError(f"Rotating a light field requires a square angular array, got {u}x{v}")
    return apply_symmetry(lf, Symmetry(flip_h, flip_v, rot90))


def compose(first: Symmetry, second: Symmetry) -> Symmetry:
    """The canonical symmetry equal to applying ``first`` and then ``second``."""
    return _find_symmetry(apply_symmetry(_apply_to_marker(first), second))


def _apply_to_marker(symmetry: Symmetry) -> np.ndarray:
    return apply_symmetry(_MARKER, symmetry)


def _find_symmetry(marker_image: np.ndarray) -> Symmetry:
    for candidate in ALL_SYMMETRIES:
        if np.array_equal(apply_symmetry(_MARKER, candidate), marker_image):
            return candidate
    raise AssertionError("The marker image is not a dihedral image of the marker")
