"""
Layered-plane scene descriptions for the synthetic light field generator.

A scene is a stack of textured fronto-parallel planes ordered far to near. Every plane has a positive depth;
its disparity between neighbouring views is ``k_d * unit_disparity / depth`` pixels, ``k_d`` being the
baseline multiplier chosen at render time. Scenes are stored as JSON::

    {
      "name": "demo",
      "angular_res": 5,
      "spatial_res": [64, 64],
      "unit_disparity": 1.0,
      "seed": 7,
      "layers": [
        {"texture": {"kind": "noise", "seed": 1, "scale": 3.0}, "depth": 4.0, "region": {"kind": "full"}},
        {"texture": {"kind": "checker", "period": 8}, "depth": 1.5,
         "region": {"kind": "disk", "center": [0.5, 0.5], "radius": 0.25}}
      ]
    }
"""

import dataclasses
import json
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from lfdfnet.exceptions import ConfigError

TEXTURE_KINDS = ("noise", "checker", "gradient", "image")
REGION_KINDS = ("full", "rect", "disk")


@dataclasses.dataclass(frozen=True)
class TextureSpec:
    kind: str = "noise"
    seed: int = 0
    # Gaussian smoothing (pixels) of the noise spectrum
    scale: float = 2.0
    # Checker square size / gradient period, in pixels
    period: int = 8
    # RGB tint multiplied into the texture; None keeps gray levels per channel
    color: Optional[Tuple[float, float, float]] = None
    path: Optional[str] = None

    def validate(self) -> None:
        if self.kind not in TEXTURE_KINDS:
            raise ConfigError(f"Unknown texture kind {self.kind}, expected one of {TEXTURE_KINDS}")
        if self.kind == "image" and not self.path:
            raise ConfigError("An image texture needs a path")
        if self.scale <= 0 or self.period < 1:
            raise ConfigError(f"Texture scale and period must be positive, got {self.scale} / {self.period}")

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "TextureSpec":
        payload = dict(payload)
        if payload.get("color") is not None:
            payload["color"] = tuple(float(c) for c in payload["color"])
        return cls(**payload)


@dataclasses.dataclass(frozen=True)
class RegionSpec:
    """Opaque support of a layer in fractions of the image size: the whole frame, a rectangle or a disk."""

    kind: str = "full"
    # rect: (top, left, height, width)
    box: Tuple[float, float, float, float] = (0.25, 0.25, 0.5, 0.5)
    # disk: (row, column) and radius relative to min(H, W)
    center: Tuple[float, float] = (0.5, 0.5)
    radius: float = 0.25

    def validate(self) -> None:
        if self.kind not in REGION_KINDS:
            raise ConfigError(f"Unknown region kind {self.kind}, expected one of {REGION_KINDS}")
        if self.kind == "disk" and self.radius <= 0:
            raise ConfigError(f"A disk region needs a positive radius, got {self.radius}")
        if self.kind == "rect" and (self.box[2] <= 0 or self.box[3] <= 0):
            raise ConfigError(f"A rect region needs a positive size, got {self.box}")

    def mask(self, height: int, width: int) -> np.ndarray:
        rows = (np.arange(height) + 0.5)[:, None]
        cols = (np.arange(width) + 0.5)[None, :]
        if self.kind == "full":
            return np.ones((height, width), dtype=np.float64)
        if self.kind == "rect":
            top, left, box_h, box_w = self.box
            inside = (
                (rows >= top * height)
                & (rows < (top + box_h) * height)
                & (cols >= left * width)
                & (cols < (left + box_w) * width)
            )
            return inside.astype(np.float64)
        radius = self.radius * min(height, width)
        inside = (rows - self.center[0] * height) ** 2 + (cols - self.center[1] * width) ** 2 <= radius**2
        return inside.astype(np.float64)

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "RegionSpec":
        payload = dict(payload)
        for key in ("box", "center"):
            if key in payload:
                payload[key] = tuple(float(x) for x in payload[key])
        return cls(**payload)


@dataclasses.dataclass(frozen=True)
class LayerSpec:
    texture: TextureSpec
    depth: float
    region: RegionSpec = RegionSpec()
    # Horizontally mirrored texture and region
    mirror: bool = False

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "LayerSpec":
        return cls(
            texture=TextureSpec.from_dict(payload.get("texture", {})),
            depth=float(payload["depth"]),
            region=RegionSpec.from_dict(payload.get("region", {})),
            mirror=bool(payload.get("mirror", False)),
        )


@dataclasses.dataclass(frozen=True)
class SceneSpec:
    layers: Tuple[LayerSpec, ...]
    angular_res: int = 5
    spatial_res: Tuple[int, int] = (64, 64)
    unit_disparity: float = 1.0
    seed: int = 0
    name: str = "scene"

    @property
    def center_index(self) -> int:
        return self.angular_res // 2

    def validate(self) -> "SceneSpec":
        if not self.layers:
            raise ConfigError("A scene needs at least one layer")
        if self.angular_res < 1:
            raise ConfigError(f"angular_res must be positive, got {self.angular_res}")
        if min(self.spatial_res) < 1:
            raise ConfigError(f"spatial_res must be positive, got {self.spatial_res}")
        if self.unit_disparity < 0:
            raise ConfigError(f"unit_disparity must not be negative, got {self.unit_disparity}")
        for layer in self.layers:
            layer.texture.validate()
            layer.region.validate()
            if layer.depth <= 0:
                raise ConfigError(f"Layer depths must be strictly positive, got {layer.depth}")
        depths = [layer.depth for layer in self.layers]
        if any(near > far for far, near in zip(depths, depths[1:])):
            raise ConfigError(f"Layers must be ordered far to near, got depths {depths}")
        if self.layers[0].region.kind != "full":
            raise ConfigError("The farthest layer must cover the whole frame")
        return self

    def mirrored(self) -> "SceneSpec":
        """The left-right mirror image of the scene."""
        layers = tuple(dataclasses.replace(layer, mirror=not layer.mirror) for layer in self.layers)
        return dataclasses.replace(self, layers=layers, name=f"{self.name}_mirrored")

    def to_dict(self) -> Dict[str, Any]:
        payload = dataclasses.asdict(self)
        payload["spatial_res"] = list(self.spatial_res)
        return payload

    def to_json(self, path: Optional[Union[str, os.PathLike]] = None) -> str:
        serialized = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(serialized)
        return serialized

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "SceneSpec":
        try:
            return cls(
                layers=tuple(LayerSpec.from_dict(layer) for layer in payload["layers"]),
                angular_res=int(payload.get("angular_res", 5)),
                spatial_res=tuple(int(x) for x in payload.get("spatial_res", (64, 64))),
                unit_disparity=float(payload.get("unit_disparity", 1.0)),
                seed=int(payload.get("seed", 0)),
                name=str(payload.get("name", "scene")),
            ).validate()
        except (KeyError, TypeError) as e:
            raise ConfigError(f"Malformed scene description: {e!r}") from e

    @classmethod
    def from_json(cls, source: Union[str, os.PathLike]) -> "SceneSpec":
        """Parses a JSON string or reads a JSON file."""
        if isinstance(source, os.PathLike) or (isinstance(source, str) and not source.lstrip().startswith("{")):
            path = Path(source)
            if not path.exists():
                raise FileNotFoundError(f"Scene description {path} does not exist")
            source = path.read_text()
        return cls.from_dict(json.loads(source))

    @classmethod
    def random(
        cls,
        seed: int,
        angular_res: int = 5,
        spatial_res: Tuple[int, int] = (64, 64),
        num_layers: int = 3,
        unit_disparity: float = 1.0,
        name: Optional[str] = None,
    ) -> "SceneSpec":
        """A random layered scene: a full noise background and ``num_layers - 1`` nearer rect / disk occluders."""
        rng = np.random.default_rng(seed)
        depths = np.sort(rng.uniform(1.0, 6.0, size=num_layers))[::-1]
        layers: List[LayerSpec] = [
            LayerSpec(
                texture=TextureSpec(kind="noise", seed=int(rng.integers(1 << 31)), scale=float(rng.uniform(1.0, 4.0))),
                depth=float(depths[0]),
            )
        ]
        for depth in depths[1:]:
            kind = str(rng.choice(["noise", "checker", "gradient"]))
            texture = TextureSpec(
                kind=kind,
                seed=int(rng.integers(1 << 31)),
                scale=float(rng.uniform(1.0, 3.0)),
                period=int(rng.choice([4, 8, 16])),
                color=tuple(float(c) for c in rng.uniform(0.4, 1.0, size=3)),
            )
            if rng.random() < 0.5:
                top, left = rng.uniform(0.05, 0.5, size=2)
                box_h, box_w = rng.uniform(0.2, 0.45, size=2)
                region = RegionSpec(kind="rect", box=(float(top), float(left), float(box_h), float(box_w)))
            else:
                region = RegionSpec(
                    kind="disk",
                    center=tuple(float(c) for c in rng.uniform(0.25, 0.75, size=2)),
                    radius=float(rng.uniform(0.1, 0.3)),
                )
            layers.append(LayerSpec(texture=texture, depth=float(depth), region=region))
        return cls(
            layers=tuple(layers),
            angular_res=angular_res,
            spatial_res=tuple(spatial_res),
            unit_disparity=unit_disparity,
            seed=seed,
            name=name or f"random_{seed}",
        ).validate()
