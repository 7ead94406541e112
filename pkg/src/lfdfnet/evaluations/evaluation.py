"""
Three-level evaluation of super-resolvers on light field datasets.

PSNR and SSIM are computed on the Y channel of every ``A x A`` view, averaged per scene, then the scene scores
are averaged over the dataset. ``+inf`` PSNR values (exact reconstructions) are left out of the averages with
a warning; a level made only of such values averages to ``+inf``.
"""

import dataclasses
import json
import math
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from tqdm import tqdm
from transformers.utils import logging

from lfdfnet.data_generators.lf_dataset import load_y_scenes, resolve_data_root
from lfdfnet.data_generators.light_field import ColorSpace, LightField
from lfdfnet.data_generators.patching import degrade
from lfdfnet.data_generators.resize import resize_bicubic
from lfdfnet.evaluations.metrics import psnr_y, ssim
from lfdfnet.exceptions import ColorSpaceError, DatasetError, LightFieldShapeError
from lfdfnet.models.hf_models.hf_lfdfnet import LfDfnetModel, model_manifest
from lfdfnet.utils.model_utils import log_function_decorator, md5, read_json, write_json

LOG = logging.get_logger(__name__)

INF_SENTINEL = "inf"


class SuperResolver:
    """Maps low-resolution Y views ``[A, A, h, w]`` to ``[A, A, alpha * h, alpha * w]``."""

    name: str = "super_resolver"
    upscale_factor: int = 1

    def __call__(self, lr_views: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def manifest(self) -> Dict[str, Any]:
        return {"resolver": self.name, "upscale_factor": self.upscale_factor}


class BicubicSuperResolver(SuperResolver):
    name = "bicubic"

    def __init__(self, upscale_factor: int):
        self.upscale_factor = upscale_factor

    def __call__(self, lr_views: np.ndarray) -> np.ndarray:
        return resize_bicubic(lr_views, self.upscale_factor)


class IdentitySuperResolver(SuperResolver):
    """Passes the input through; only meaningful at ``alpha = 1``."""

    name = "identity"
    upscale_factor = 1

    def __call__(self, lr_views: np.ndarray) -> np.ndarray:
        return np.array(lr_views, copy=True)


class ModelSuperResolver(SuperResolver):
    def __init__(self, model: LfDfnetModel, name: str = "lfdfnet"):
        self.model = model
        self.name = name
        self.upscale_factor = model.config.upscale_factor

    def __call__(self, lr_views: np.ndarray) -> np.ndarray:
        lf = LightField(data=np.asarray(lr_views, dtype=np.float32)[..., None], color_space=ColorSpace.Y)
        return self.model.super_resolve(lf).data[..., 0]

    def manifest(self) -> Dict[str, Any]:
        return model_manifest(self.model)


def _finite_mean(values: Sequence[float], what: str) -> float:
    values = np.asarray(values, dtype=np.float64).ravel()
    finite = values[np.isfinite(values)]
    if finite.size < values.size:
        LOG.warning("%d infinite PSNR value(s) left out of the %s average", values.size - finite.size, what)
    if finite.size == 0:
        return math.inf
    return float(finite.mean())


def _encode(value: float) -> Union[float, str]:
    return INF_SENTINEL if math.isinf(value) else float(value)


def _decode(value: Union[float, str]) -> float:
    return math.inf if value == INF_SENTINEL else float(value)


@dataclasses.dataclass(frozen=True)
class ViewMetrics:
    u: int
    v: int
    psnr: float
    ssim: float


@dataclasses.dataclass
class SceneMetrics:
    name: str
    # [A, A] grids indexed by (u, v)
    psnr_grid: np.ndarray
    ssim_grid: np.ndarray

    @property
    def views(self) -> List[ViewMetrics]:
        u_size, v_size = self.psnr_grid.shape
        return [
            ViewMetrics(u, v, float(self.psnr_grid[u, v]), float(self.ssim_grid[u, v]))
            for u in range(u_size)
            for v in range(v_size)
        ]

    @property
    def psnr(self) -> float:
        return _finite_mean(self.psnr_grid, f"scene {self.name} PSNR")

    @property
    def ssim(self) -> float:
        return float(np.mean(self.ssim_grid))

    @property
    def psnr_std(self) -> float:
        """Spread of PSNR across perspectives; lower means a more balanced reconstruction."""
        finite = self.psnr_grid[np.isfinite(self.psnr_grid)]
        return float(np.std(finite)) if finite.size else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "psnr_grid": [[_encode(x) for x in row] for row in self.psnr_grid.tolist()],
            "ssim_grid": self.ssim_grid.tolist(),
            "psnr": _encode(self.psnr),
            "ssim": self.ssim,
            "psnr_std": self.psnr_std,
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "SceneMetrics":
        return cls(
            name=payload["name"],
            psnr_grid=np.asarray([[_decode(x) for x in row] for row in payload["psnr_grid"]], dtype=np.float64),
            ssim_grid=np.asarray(payload["ssim_grid"], dtype=np.float64),
        )


@dataclasses.dataclass
class MetricReport:
    scenes: List[SceneMetrics]
    metadata: Dict[str, Any] = dataclasses.field(default_factory=dict)

    @property
    def psnr(self) -> float:
        return _finite_mean([scene.psnr for scene in self.scenes], "dataset PSNR")

    @property
    def ssim(self) -> float:
        return float(np.mean([scene.ssim for scene in self.scenes]))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "metadata": self.metadata,
            "per_dataset": {"psnr": _encode(self.psnr), "ssim": self.ssim},
            "per_scene": [scene.to_dict() for scene in self.scenes],
        }

    def to_json(self, path: Optional[Union[str, os.PathLike]] = None) -> str:
        if path is not None:
            write_json(self.to_dict(), path)
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, source: Union[str, os.PathLike]) -> "MetricReport":
        path = Path(source)
        payload = read_json(path) if path.suffix == ".json" and path.exists() else json.loads(str(source))
        return cls(
            scenes=[SceneMetrics.from_dict(scene) for scene in payload["per_scene"]],
            metadata=payload.get("metadata", {}),
        )

    def to_frame(self) -> pd.DataFrame:
        """One row per view: ``scene, u, v, psnr, ssim``."""
        return pd.DataFrame(
            [
                {"scene": scene.name, "u": view.u, "v": view.v, "psnr": view.psnr, "ssim": view.ssim}
                for scene in self.scenes
                for view in scene.views
            ]
        )

    def to_scene_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {"scene": scene.name, "psnr": scene.psnr, "ssim": scene.ssim, "psnr_std": scene.psnr_std}
                for scene in self.scenes
            ]
        )

    def write(self, out_dir: Union[str, os.PathLike], name: str = "metric_report") -> Path:
        """Writes ``{name}.json``, the per-view ``{name}.csv`` and the per-scene ``{name}_scenes.csv``."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        self.to_json(out_dir / f"{name}.json")
        self.to_frame().to_csv(out_dir / f"{name}.csv", index=False)
        self.to_scene_frame().to_csv(out_dir / f"{name}_scenes.csv", index=False)
        return out_dir / f"{name}.json"


def super_resolve_scene(resolver: SuperResolver, hr: LightField) -> np.ndarray:
    """Degrades a ground-truth Y light field and super-resolves it back, returning ``[A, A, H, W]`` views."""
    if hr.color_space != ColorSpace.Y:
        raise ColorSpaceError(f"Evaluation runs on Y light fields, got {hr.color_space.value}")
    lr = degrade(hr, resolver.upscale_factor)
    sr = np.asarray(resolver(lr.data[..., 0]), dtype=np.float64)
    if sr.shape != hr.data.shape[:-1]:
        raise LightFieldShapeError(f"{resolver.name} returned {sr.shape}, expected {hr.data.shape[:-1]}")
    return sr


def score_scene(name: str, sr: np.ndarray, hr: LightField) -> SceneMetrics:
    hr_views = hr.data[..., 0]
    u_size, v_size = hr.angular_shape
    psnr_grid = np.empty((u_size, v_size), dtype=np.float64)
    ssim_grid = np.empty((u_size, v_size), dtype=np.float64)
    for u in range(u_size):
        for v in range(v_size):
            psnr_grid[u, v] = psnr_y(sr[u, v], hr_views[u, v])
            ssim_grid[u, v] = ssim(sr[u, v], hr_views[u, v])
    return SceneMetrics(name=name, psnr_grid=psnr_grid, ssim_grid=ssim_grid)


def evaluate_scene(resolver: SuperResolver, name: str, hr: LightField) -> SceneMetrics:
    return score_scene(name, super_resolve_scene(resolver, hr), hr)


@log_function_decorator
def evaluate(
    resolver: SuperResolver,
    dataset: Union[str, os.PathLike, Sequence[Tuple[str, LightField]]],
    angular_resolution: Optional[int] = None,
    dataset_id: Optional[str] = None,
) -> MetricReport:
    """
    Degrades every ground-truth scene, super-resolves it and scores every view.

    ``dataset`` is either a dataset directory (scenes are centre-cropped to ``angular_resolution``, trimmed to
    multiples of the upscale factor and converted to Y) or a sequence of ``(name, Y light field)`` pairs.
    """
    if isinstance(dataset, (str, os.PathLike)):
        if angular_resolution is None:
            raise ValueError("angular_resolution is needed to load a dataset directory")
        data_root = resolve_data_root(dataset)
        dataset_id = dataset_id or str(data_root)
        scenes = [(name, lf) for name, lf, _ in load_y_scenes(data_root, angular_resolution, resolver.upscale_factor)]
    else:
        scenes = list(dataset)
    if not scenes:
        raise DatasetError("The evaluation dataset has no scene")

    metrics = [evaluate_scene(resolver, name, hr) for name, hr in tqdm(scenes, desc=f"Evaluating {resolver.name}")]
    report = MetricReport(
        scenes=metrics,
        metadata={
            "resolver": resolver.name,
            "model_manifest_md5": md5(json.dumps(resolver.manifest(), sort_keys=True, default=str)),
            "dataset": dataset_id,
            "alpha": resolver.upscale_factor,
            "num_scenes": len(metrics),
        },
    )
    LOG.info("%s: PSNR %.3f dB, SSIM %.4f over %d scenes", resolver.name, report.psnr, report.ssim, len(metrics))
    return report
