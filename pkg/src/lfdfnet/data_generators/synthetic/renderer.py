"""
Rendering of layered scenes into light fields with exact ground-truth disparity.

The cameras follow a concentric configuration: every baseline multiplier ``k_d`` shares the center camera, so the
center view of a scene does not depend on ``k_d``. View ``(u, v)`` shows each layer shifted by
``d * (u - u_c, v - v_c)`` pixels, ``d = k_d * unit_disparity / depth``; textures and masks are sampled
bilinearly with wrap-around and the layers are composited near over far.
"""

import dataclasses
import os
from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.ndimage import map_coordinates
from transformers.utils import logging

from lfdfnet.data_generators.light_field import ColorSpace, LightField
from lfdfnet.data_generators.lf_dataset import SceneMeta, save_disparity, save_light_field
from lfdfnet.data_generators.synthetic.scene_spec import LayerSpec, SceneSpec
from lfdfnet.data_generators.synthetic.textures import make_texture
from lfdfnet.exceptions import ConfigError, LightFieldShapeError

logger = logging.get_logger(__name__)

DEFAULT_BASELINE_MULTIPLIERS = (0, 1, 2, 3, 4)


class EpiAxis(Enum):
    ROW = "row"
    COL = "col"


@dataclasses.dataclass(frozen=True)
class DisparityMap:
    """Center-view disparity in pixels per unit angular step."""

    data: np.ndarray

    @property
    def range(self) -> Tuple[float, float]:
        return float(self.data.min()), float(self.data.max())


def layer_disparity(scene: SceneSpec, layer: LayerSpec, k_d: float) -> float:
    return k_d * scene.unit_disparity / layer.depth


def _layer_planes(scene: SceneSpec) -> List[Tuple[np.ndarray, np.ndarray]]:
    height, width = scene.spatial_res
    planes = []
    for layer in scene.layers:
        texture = make_texture(layer.texture, height, width)
        mask = layer.region.mask(height, width)
        if layer.mirror:
            texture, mask = texture[:, ::-1], mask[:, ::-1]
        planes.append((np.ascontiguousarray(texture), np.ascontiguousarray(mask)))
    return planes


def _visible_layers(scene: SceneSpec, planes: List[Tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    """Index of the nearest opaque layer at every pixel of the center view."""
    visible = np.zeros(scene.spatial_res, dtype=np.int64)
    for index, (_, mask) in enumerate(planes):
        visible[mask >= 0.5] = index
    return visible


def _sample(plane: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    return map_coordinates(plane, [rows, cols], order=1, mode="grid-wrap")


def render(scene: SceneSpec, k_d: float) -> Tuple[LightField, DisparityMap]:
    scene.validate()
    if k_d < 0:
        raise ConfigError(f"The baseline multiplier must not be negative, got {k_d}")

    height, width = scene.spatial_res
    a = scene.angular_res
    center = scene.center_index
    planes = _layer_planes(scene)
    disparities = [layer_disparity(scene, layer, k_d) for layer in scene.layers]
    rows, cols = np.meshgrid(np.arange(height, dtype=np.float64), np.arange(width, dtype=np.float64), indexing="ij")

    data = np.empty((a, a, height, width, 3), dtype=np.float64)
    for u in range(a):
        for v in range(a):
            view = None
            for (texture, mask), disparity in zip(planes, disparities):
                sample_rows = rows - disparity * (u - center)
                sample_cols = cols - disparity * (v - center)
                color = np.stack([_sample(texture[..., c], sample_rows, sample_cols) for c in range(3)], axis=-1)
                if view is None:
                    view = color
                    continue
                alpha = _sample(mask, sample_rows, sample_cols)[..., None]
                view = alpha * color + (1.0 - alpha) * view
            data[u, v] = view

    visible = _visible_layers(scene, planes)
    disparity_map = np.asarray(disparities, dtype=np.float64)[visible]
    lf = LightField(data=np.clip(data, 0.0, 1.0).astype(np.float32), color_space=ColorSpace.RGB)
    return lf, DisparityMap(data=disparity_map.astype(np.float32))


def disparity_range(scene: SceneSpec, k_d: float) -> Tuple[float, float]:
    """Smallest and largest disparity among the layers visible in the center view."""
    scene.validate()
    planes = _layer_planes(scene)
    visible = np.unique(_visible_layers(scene, planes))
    values = [layer_disparity(scene, scene.layers[index], k_d) for index in visible]
    return float(min(values)), float(max(values))


def epi_extract(
    lf: LightField, axis: Union[str, EpiAxis], spatial_index: int, angular_index: int
) -> np.ndarray:
    """
    Epipolar plane image of a light field.

    ``row`` fixes ``u = angular_index`` and ``h = spatial_index`` and returns a ``[V, W(, C)]`` image, ``col``
    fixes ``v`` and ``w`` and returns ``[U, H(, C)]``. A plane with disparity ``d`` traces lines advancing ``d``
    pixels per view. Single-channel light fields give 2D images.
    """
    axis = EpiAxis(axis)
    u_size, v_size, height, width, _ = lf.data.shape
    if axis == EpiAxis.ROW:
        if not (0 <= angular_index < u_size and 0 <= spatial_index < height):
            raise LightFieldShapeError(
                f"Row EPI indices (u={angular_index}, h={spatial_index}) out of range for {lf.data.shape}"
            )
        epi = lf.data[angular_index, :, spatial_index, :, :]
    else:
        if not (0 <= angular_index < v_size and 0 <= spatial_index < width):
            raise LightFieldShapeError(
                f"Column EPI indices (v={angular_index}, w={spatial_index}) out of range for {lf.data.shape}"
            )
        epi = lf.data[:, angular_index, :, spatial_index, :]
    epi = np.ascontiguousarray(epi)
    return epi[..., 0] if epi.shape[-1] == 1 else epi


def _rising_crossings(row: np.ndarray, level: float) -> np.ndarray:
    below = row[:-1] < level
    above = row[1:] >= level
    starts = np.nonzero(below & above)[0]
    return starts + (level - row[starts]) / (row[starts + 1] - row[starts])


def measure_epi_slope(epi: np.ndarray, edge_hint: Optional[float] = None) -> float:
    """
    Disparity (pixels per view) of the edge nearest ``edge_hint`` in an EPI, by a linear fit of its sub-pixel
    positions across views.

    The edge position in every view is where the intensity crosses the half level of the EPI going up; the
    crossing nearest the previous view's position is tracked from the center view outwards.
    """
    if epi.ndim == 3:
        epi = epi.mean(axis=-1)
    num_views, width = epi.shape
    level = 0.5 * (float(epi.min()) + float(epi.max()))
    center = num_views // 2
    previous = width / 2.0 if edge_hint is None else float(edge_hint)

    positions = np.full(num_views, np.nan)
    for order in (range(center, num_views), range(center, -1, -1)):
        tracked = previous
        for view in order:
            crossings = _rising_crossings(epi[view], level)
            if crossings.size == 0:
                raise ValueError(f"View {view} of the EPI has no rising edge")
            tracked = float(crossings[np.argmin(np.abs(crossings - tracked))])
            positions[view] = tracked
        previous = positions[center]

    slope, _ = np.polyfit(np.arange(num_views, dtype=np.float64), positions, deg=1)
    return float(slope)


def write_scene_dataset(scene: SceneSpec, k_d: float, out_dir: Union[str, os.PathLike]) -> Path:
    """Renders ``scene`` at ``k_d`` and writes it as one dataset scene directory with ground-truth disparity."""
    lf, disparity = render(scene, k_d)
    meta = SceneMeta(
        angular_res=lf.angular_shape,
        spatial_res=lf.spatial_shape,
        color_space=ColorSpace.RGB,
        baseline_mult=k_d,
        disparity_range=disparity_range(scene, k_d),
        scene_name=scene.name,
    )
    scene_dir = save_light_field(lf, out_dir, meta)
    save_disparity(disparity.data, scene_dir)
    logger.info("Wrote scene %s (k_d=%s, disparity range %s) to %s", scene.name, k_d, meta.disparity_range, scene_dir)
    return scene_dir
