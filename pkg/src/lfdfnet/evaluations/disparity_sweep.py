"""
Robustness of super-resolvers to growing disparities.

One scene description is rendered at every baseline multiplier ``k_d``; all renderings share the center view,
so PSNR differences along the sweep isolate the effect of disparity. The bicubic row measures how the content
itself changes with ``k_d``.
"""

import dataclasses
import os
from pathlib import Path
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from transformers.utils import logging

from lfdfnet.data_generators.light_field import LightField, crop_spatial_to_multiple, rgb_to_y
from lfdfnet.data_generators.synthetic.renderer import EpiAxis, disparity_range, epi_extract, render
from lfdfnet.data_generators.synthetic.scene_spec import SceneSpec
from lfdfnet.evaluations.evaluation import BicubicSuperResolver, SuperResolver, score_scene, super_resolve_scene
from lfdfnet.evaluations.plotting import plot_epi_strips, plot_sweep_curves
from lfdfnet.exceptions import ConfigError
from lfdfnet.utils.model_utils import log_function_decorator, write_json

LOG = logging.get_logger(__name__)

GROUND_TRUTH = "ground_truth"


def kd_label(k_d: float) -> str:
    return f"kd{k_d:g}"


def column_header(label: str, bounds: Tuple[float, float]) -> str:
    """A sweep column header carrying the disparity range of the rendering, e.g. ``kd2 d∈[-1.00,2.00]``."""
    low, high = (float(bound) + 0.0 for bound in bounds)
    return f"{label} d∈[{low:.2f},{high:.2f}]"


@dataclasses.dataclass
class SweepResult:
    # PSNR (dB), one row per model and one column per baseline multiplier
    table: pd.DataFrame
    disparity_ranges: Dict[str, Tuple[float, float]]
    # Row EPIs through the center row of views, ground truth and every model, per baseline multiplier
    epis: Dict[str, Dict[str, np.ndarray]]

    def headed_table(self) -> pd.DataFrame:
        """The PSNR table with every column header extended by its disparity range."""
        return self.table.rename(
            columns={label: column_header(label, self.disparity_ranges[label]) for label in self.table.columns}
        )

    def write(self, out_dir: Union[str, os.PathLike], image_format: str = "png") -> Path:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        self.headed_table().to_csv(out_dir / "sweep.csv", index_label="model")
        ranges = {label: list(bounds) for label, bounds in self.disparity_ranges.items()}
        write_json(ranges, out_dir / "sweep_disparity.json")
        for label, epis in self.epis.items():
            plot_epi_strips(epis, out_dir / f"epi_{label}.{image_format}", title=label)
        plot_sweep_curves(self.table, out_dir / f"sweep.{image_format}", self.disparity_ranges)
        return out_dir / "sweep.csv"


def _check_alphas(models: Mapping[str, SuperResolver]) -> int:
    alphas = {resolver.upscale_factor for resolver in models.values()}
    if len(alphas) != 1:
        raise ConfigError(f"All models of a sweep must share one upscale factor, got {sorted(alphas)}")
    return alphas.pop()


def _ground_truth(scene: SceneSpec, k_d: float, alpha: int) -> LightField:
    lf, _ = render(scene, k_d)
    return rgb_to_y(crop_spatial_to_multiple(lf, alpha))


@log_function_decorator
def disparity_sweep(
    models: Mapping[str, SuperResolver],
    scene: SceneSpec,
    kd_list: Sequence[float],
    include_bicubic: bool = True,
    epi_row: Optional[int] = None,
    upscale_factor: int = 2,
) -> SweepResult:
    """Scores every model on ``scene`` rendered at each ``k_d``; the table has one row per model."""
    if not models and not include_bicubic:
        raise ConfigError("A disparity sweep needs at least one model")
    models = dict(models)
    alpha = _check_alphas(models) if models else upscale_factor
    if include_bicubic and BicubicSuperResolver.name not in models:
        models[BicubicSuperResolver.name] = BicubicSuperResolver(alpha)
    _check_alphas(models)

    table = pd.DataFrame(index=pd.Index(list(models), name="model"), dtype=np.float64)
    disparity_ranges, epis = {}, {}
    for k_d in kd_list:
        label = kd_label(k_d)
        hr = _ground_truth(scene, k_d, alpha)
        row = hr.spatial_shape[0] // 2 if epi_row is None else epi_row
        center = hr.center_index[0]
        disparity_ranges[label] = disparity_range(scene, k_d)
        epis[label] = {GROUND_TRUTH: epi_extract(hr, EpiAxis.ROW, row, center)}

        for name, resolver in models.items():
            sr = super_resolve_scene(resolver, hr)
            table.loc[name, label] = score_scene(f"{scene.name}_{label}", sr, hr).psnr
            sr_lf = hr.with_data(sr[..., None].astype(np.float32))
            epis[label][name] = epi_extract(sr_lf, EpiAxis.ROW, row, center)
        LOG.info("k_d=%s (disparity %s): %s", k_d, disparity_ranges[label], table[label].round(3).to_dict())

    return SweepResult(table=table, disparity_ranges=disparity_ranges, epis=epis)
