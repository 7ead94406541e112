"""Procedural RGB textures in [0, 1]; noise, checker and gradient textures tile seamlessly over the frame."""

from pathlib import Path

import numpy as np
from PIL import Image

from lfdfnet.data_generators.synthetic.scene_spec import TextureSpec
from lfdfnet.exceptions import DatasetError

LOW, HIGH = 0.1, 0.9


def _stretch(values: np.ndarray) -> np.ndarray:
    low, high = values.min(), values.max()
    if high - low < 1e-12:
        return np.full_like(values, 0.5)
    return LOW + (values - low) / (high - low) * (HIGH - LOW)


def _tint(gray: np.ndarray, spec: TextureSpec) -> np.ndarray:
    if gray.ndim == 2:
        gray = np.repeat(gray[..., None], 3, axis=-1)
    if spec.color is None:
        return gray
    return gray * np.asarray(spec.color, dtype=np.float64)


def noise_texture(spec: TextureSpec, height: int, width: int) -> np.ndarray:
    """White noise low-passed in the Fourier domain, hence periodic over the frame."""
    rng = np.random.default_rng(spec.seed)
    white = rng.standard_normal((height, width, 3))
    freq_y = np.fft.fftfreq(height)[:, None]
    freq_x = np.fft.fftfreq(width)[None, :]
    gaussian = np.exp(-2.0 * (np.pi * spec.scale) ** 2 * (freq_y**2 + freq_x**2))
    smooth = np.real(np.fft.ifft2(np.fft.fft2(white, axes=(0, 1)) * gaussian[..., None], axes=(0, 1)))
    if spec.color is not None:
        smooth = smooth.mean(axis=-1)
    return _tint(_stretch(smooth), spec)


def checker_texture(spec: TextureSpec, height: int, width: int) -> np.ndarray:
    """Squares of ``period`` pixels; seamless when the frame size is a multiple of ``2 * period``."""
    rows = np.arange(height)[:, None] // spec.period
    cols = np.arange(width)[None, :] // spec.period
    board = np.where((rows + cols) % 2 == 0, 0.2, 0.8)
    return _tint(board, spec)


def gradient_texture(spec: TextureSpec, height: int, width: int) -> np.ndarray:
    """A smooth raised-cosine ramp along a seeded direction, periodic over the frame."""
    rng = np.random.default_rng(spec.seed)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    # Integer cycles per frame in each direction keep the pattern periodic
    cycles_y = max(1, round(height / (4 * spec.period)))
    cycles_x = max(1, round(width / spec.period))
    rows = np.arange(height)[:, None] / height
    cols = np.arange(width)[None, :] / width
    ramp = 0.5 + 0.4 * np.cos(2.0 * np.pi * (cycles_y * rows + cycles_x * cols) + phase)
    return _tint(ramp, spec)


def image_texture(spec: TextureSpec, height: int, width: int) -> np.ndarray:
    path = Path(spec.path)
    if not path.exists():
        raise DatasetError(f"Texture image {path} does not exist")
    with Image.open(path) as image:
        resized = image.convert("RGB").resize((width, height), resample=Image.BICUBIC)
    rgb = np.asarray(resized, dtype=np.float64) / 255.0
    if spec.color is not None:
        rgb = rgb * np.asarray(spec.color, dtype=np.float64)
    return rgb


TEXTURE_FACTORIES = {
    "noise": noise_texture,
    "checker": checker_texture,
    "gradient": gradient_texture,
    "image": image_texture,
}


def make_texture(spec: TextureSpec, height: int, width: int) -> np.ndarray:
    spec.validate()
    texture = TEXTURE_FACTORIES[spec.kind](spec, height, width)
    return np.clip(texture, 0.0, 1.0)
