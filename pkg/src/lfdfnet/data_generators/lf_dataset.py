"""
On-disk light field datasets and the patch dataset used for training.

A scene directory holds one 8-bit PNG per view, ``view_UU_VV.png`` (zero-padded angular indices), a
``meta.json`` and, for synthetic scenes, the center-view ground-truth disparity ``disparity.f32``
(row-major little-endian float32, ``H x W``)::

    scene_kd2/
        meta.json
        view_00_00.png ... view_04_04.png
        disparity.f32
"""

import dataclasses
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch
from PIL import Image
from torch.utils.data import Dataset
from transformers.utils import logging

from lfdfnet.data_generators.augmentation import ALL_SYMMETRIES, apply_symmetry
from lfdfnet.data_generators.light_field import ColorSpace, LightField, crop_angular, crop_spatial_to_multiple, rgb_to_y
from lfdfnet.data_generators.patching import degrade, extract_patches
from lfdfnet.exceptions import DatasetError
from lfdfnet.utils.model_utils import log_function_decorator, read_json, write_json

logger = logging.get_logger(__name__)

META_FILE = "meta.json"
DISPARITY_FILE = "disparity.f32"
VIEW_FILE_TEMPLATE = "view_{u:02d}_{v:02d}.png"
DATA_ROOT_ENV = "LFDF_DATA_ROOT"


@dataclasses.dataclass
class SceneMeta:
    angular_res: Tuple[int, int]
    spatial_res: Tuple[int, int]
    color_space: ColorSpace = ColorSpace.RGB
    baseline_mult: Optional[float] = None
    disparity_range: Optional[Tuple[float, float]] = None
    scene_name: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "angular_res": list(self.angular_res),
            "spatial_res": list(self.spatial_res),
            "color_space": self.color_space.value,
            "baseline_mult": self.baseline_mult,
            "disparity_range": None if self.disparity_range is None else [float(x) for x in self.disparity_range],
            "scene_name": self.scene_name,
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "SceneMeta":
        try:
            disparity_range = payload.get("disparity_range")
            return cls(
                angular_res=tuple(int(x) for x in payload["angular_res"]),
                spatial_res=tuple(int(x) for x in payload["spatial_res"]),
                color_space=ColorSpace(payload.get("color_space", ColorSpace.RGB.value)),
                baseline_mult=payload.get("baseline_mult"),
                disparity_range=None if disparity_range is None else tuple(float(x) for x in disparity_range),
                scene_name=payload.get("scene_name"),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise DatasetError(f"Malformed {META_FILE}: {e}") from e


def resolve_data_root(path: Optional[Union[str, os.PathLike]]) -> Path:
    """Relative paths (and a missing path) resolve against ``$LFDF_DATA_ROOT`` when it is set."""
    data_root = os.environ.get(DATA_ROOT_ENV)
    if path is None or str(path) == "":
        if not data_root:
            raise DatasetError(f"No dataset path given and {DATA_ROOT_ENV} is not set")
        return Path(data_root)
    path = Path(os.path.expanduser(str(path)))
    if not path.is_absolute() and data_root:
        return Path(data_root) / path
    return path


def save_light_field(lf: LightField, scene_dir: Union[str, os.PathLike], meta: SceneMeta) -> Path:
    """Writes the views as 8-bit PNGs plus ``meta.json``; ``Y`` light fields are stored as grayscale."""
    if lf.color_space == ColorSpace.YCBCR:
        raise DatasetError("Scenes are stored as RGB or Y, convert YCbCr light fields first")
    scene_dir = Path(scene_dir)
    scene_dir.mkdir(parents=True, exist_ok=True)
    low, high = lf.value_range
    quantized = np.round((np.clip(lf.data, low, high) - low) / (high - low) * 255.0).astype(np.uint8)
    u_size, v_size = lf.angular_shape
    for u in range(u_size):
        for v in range(v_size):
            view = quantized[u, v]
            image = Image.fromarray(view[..., 0], mode="L") if lf.channels == 1 else Image.fromarray(view, mode="RGB")
            image.save(scene_dir / VIEW_FILE_TEMPLATE.format(u=u, v=v))
    write_json(meta.to_dict(), scene_dir / META_FILE)
    return scene_dir


def load_scene_meta(scene_dir: Union[str, os.PathLike]) -> SceneMeta:
    meta_path = Path(scene_dir) / META_FILE
    if not meta_path.exists():
        raise DatasetError(f"{meta_path} does not exist")
    return SceneMeta.from_dict(read_json(meta_path))


def load_light_field(scene_dir: Union[str, os.PathLike]) -> Tuple[LightField, SceneMeta]:
    scene_dir = Path(scene_dir)
    meta = load_scene_meta(scene_dir)
    u_size, v_size = meta.angular_res
    rows = []
    for u in range(u_size):
        row = []
        for v in range(v_size):
            view_path = scene_dir / VIEW_FILE_TEMPLATE.format(u=u, v=v)
            if not view_path.exists():
                raise DatasetError(f"Missing view {view_path.name} in {scene_dir}")
            with Image.open(view_path) as image:
                view = np.asarray(image.convert("L" if meta.color_space == ColorSpace.Y else "RGB"), dtype=np.uint8)
            row.append(view[..., None] if view.ndim == 2 else view)
        rows.append(np.stack(row, axis=0))
    data = np.stack(rows, axis=0).astype(np.float32) / 255.0

    if tuple(data.shape[2:4]) != tuple(meta.spatial_res):
        raise DatasetError(f"{scene_dir} views are {data.shape[2:4]} but meta.json declares {meta.spatial_res}")
    return LightField(data=data, color_space=meta.color_space), meta


def save_disparity(disparity: np.ndarray, scene_dir: Union[str, os.PathLike]) -> Path:
    path = Path(scene_dir) / DISPARITY_FILE
    np.ascontiguousarray(disparity, dtype="<f4").tofile(path)
    return path


def load_disparity(scene_dir: Union[str, os.PathLike]) -> np.ndarray:
    scene_dir = Path(scene_dir)
    path = scene_dir / DISPARITY_FILE
    if not path.exists():
        raise DatasetError(f"{scene_dir} has no ground-truth {DISPARITY_FILE}")
    height, width = load_scene_meta(scene_dir).spatial_res
    values = np.fromfile(path, dtype="<f4")
    if values.size != height * width:
        raise DatasetError(f"{path} holds {values.size} values, expected {height}x{width}")
    return values.reshape(height, width).astype(np.float32)


def list_scene_dirs(root: Union[str, os.PathLike]) -> List[Path]:
    """Every sub-directory of ``root`` containing a ``meta.json``, sorted by name; ``root`` itself may be a scene."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"Dataset directory {root} does not exist")
    if (root / META_FILE).exists():
        return [root]
    scene_dirs = sorted(path for path in root.iterdir() if (path / META_FILE).exists())
    if not scene_dirs:
        raise DatasetError(f"{root} contains no scene directory with a {META_FILE}")
    return scene_dirs


def prepare_y_light_field(lf: LightField, angular_resolution: int, alpha: int) -> LightField:
    """Central ``A x A`` crop, spatial trim to a multiple of ``alpha`` and conversion to the Y channel."""
    lf = crop_spatial_to_multiple(crop_angular(lf, angular_resolution), alpha)
    if lf.color_space == ColorSpace.RGB:
        lf = rgb_to_y(lf)
    return lf


@log_function_decorator
def load_y_scenes(
    data_root: Union[str, os.PathLike], angular_resolution: int, alpha: int
) -> List[Tuple[str, LightField, SceneMeta]]:
    scenes = []
    for scene_dir in list_scene_dirs(data_root):
        lf, meta = load_light_field(scene_dir)
        scenes.append((meta.scene_name or scene_dir.name, prepare_y_light_field(lf, angular_resolution, alpha), meta))
    logger.info("Loaded %d scenes from %s", len(scenes), data_root)
    return scenes


class LightFieldPatchDataset(Dataset):
    """
    Paired high / low resolution Y patches cut from a list of light fields.

    Each item is ``{"index": int, "hr": [A, A, P, P], "lr": [A, A, P / alpha, P / alpha]}`` where ``P`` is the
    high-resolution patch size. Patches are built once, un-augmented; symmetries are drawn by the collator.
    """

    def __init__(self, light_fields: Sequence[LightField], patch_size: int, stride: int, alpha: int):
        hr_patches, lr_patches = [], []
        for lf in light_fields:
            for patch in extract_patches(lf, patch_size, stride):
                hr_patches.append(patch.data[..., 0])
                lr_patches.append(degrade(patch, alpha).data[..., 0])
        if not hr_patches:
            raise DatasetError("No training patch could be extracted")
        self.hr = torch.from_numpy(np.stack(hr_patches).astype(np.float32))
        self.lr = torch.from_numpy(np.stack(lr_patches).astype(np.float32))

    @classmethod
    def from_directory(
        cls,
        data_root: Union[str, os.PathLike],
        angular_resolution: int,
        patch_size: int,
        stride: int,
        alpha: int,
    ) -> "LightFieldPatchDataset":
        scenes = load_y_scenes(data_root, angular_resolution, alpha)
        return cls([lf for _, lf, _ in scenes], patch_size, stride, alpha)

    def __len__(self) -> int:
        return self.hr.shape[0]

    def __getitem__(self, index: int) -> Dict[str, Any]:
        return {"index": index, "hr": self.hr[index], "lr": self.lr[index]}


class LightFieldPatchCollator:
    """
    Stacks patches into ``[B, A, A, h, w]`` batches, applying one dihedral symmetry per patch.

    The symmetry of a patch is a pure function of ``(seed, epoch, index)`` so batches do not depend on the
    worker layout of the data loader.
    """

    def __init__(self, seed: int, augment: bool = True):
        self.seed = seed
        self.augment = augment
        self.epoch = 0

    def set_epoch(self, epoch: int) -> None:
        self.epoch = epoch

    def symmetry_for(self, index: int):
        draw = np.random.default_rng((self.seed, self.epoch, int(index))).integers(len(ALL_SYMMETRIES))
        return ALL_SYMMETRIES[int(draw)]

    def __call__(self, examples: List[Dict[str, Any]]) -> Dict[str, torch.Tensor]:
        hr_batch, lr_batch = [], []
        for example in examples:
            hr, lr = example["hr"], example["lr"]
            if self.augment:
                symmetry = self.symmetry_for(example["index"])
                hr = apply_symmetry(hr, symmetry)
                lr = apply_symmetry(lr, symmetry)
            hr_batch.append(hr.contiguous())
            lr_batch.append(lr.contiguous())
        return {
            "lr_views": torch.stack(lr_batch),
            "labels": torch.stack(hr_batch),
            "index": torch.tensor([int(example["index"]) for example in examples], dtype=torch.long),
        }
