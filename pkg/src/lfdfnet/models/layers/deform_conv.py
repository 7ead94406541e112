"""
Deformable 2D convolution with bilinear fractional sampling, written with plain torch ops.

For every output position ``p0`` and kernel tap ``pn`` the input is sampled at ``p0 + pn + offset(p0, n)``
and the samples are weighted by the kernel::

    out(p0) = sum_n w(pn) * bilinear(x, p0 + pn + offset(p0, n)) + b

Conventions (they are part of the checkpoint format):

* offsets are ``[B, 2 * k * k, H, W]``, tap-major with interleaved ``(dy, dx)`` pairs:
  ``[tap0_dy, tap0_dx, tap1_dy, ...]``; taps are enumerated in raster order over the ``k x k`` window,
* one deformable group, offsets shared by all input channels,
* stride 1, dilation 1, zero padding: samples outside the image read 0 and border cells blend partially,
* at exactly integer coordinates the lower-left cell is used, so the offset gradient there is the
  derivative from the left.

Gradients come from autograd; :func:`deform_conv2d_grad` and :func:`gradient_check` expose and verify them.
"""

import dataclasses
import math
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np
import torch
from torch import nn

from lfdfnet.exceptions import LightFieldShapeError

GRADIENT_TARGETS = ("feature", "weight", "bias", "offsets")


def kernel_taps(kernel_size: int) -> List[Tuple[int, int]]:
    """The predefined sampling grid R, e.g. ``(-1, -1) ... (1, 1)`` for a 3x3 kernel, in raster order."""
    if kernel_size < 1 or kernel_size % 2 == 0:
        raise LightFieldShapeError(f"The kernel size must be odd and positive, got {kernel_size}")
    radius = kernel_size // 2
    return [(i - radius, j - radius) for i in range(kernel_size) for j in range(kernel_size)]


@dataclasses.dataclass(frozen=True)
class OffsetField:
    """Per-position, per-tap ``(dy, dx)`` displacements of one view stored as ``[H, W, 2 * k * k]``."""

    data: np.ndarray
    kernel_size: int = 3

    def __post_init__(self):
        expected = 2 * self.kernel_size**2
        if self.data.ndim != 3 or self.data.shape[-1] != expected:
            raise LightFieldShapeError(
                f"An offset field for a {self.kernel_size}x{self.kernel_size} kernel is [H, W, {expected}], "
                f"got {self.data.shape}"
            )

    @property
    def num_taps(self) -> int:
        return self.kernel_size**2

    def dy(self, tap: int) -> np.ndarray:
        return self.data[..., 2 * tap]

    def dx(self, tap: int) -> np.ndarray:
        return self.data[..., 2 * tap + 1]

    def to_tensor(self, dtype: torch.dtype = torch.float32) -> torch.Tensor:
        return torch.from_numpy(np.ascontiguousarray(self.data.transpose(2, 0, 1))).to(dtype).unsqueeze(0)

    @classmethod
    def from_tensor(cls, offsets: torch.Tensor, kernel_size: int = 3) -> "OffsetField":
        if offsets.dim() == 4:
            if offsets.shape[0] != 1:
                raise LightFieldShapeError(f"Expected a single offset map, got a batch of {offsets.shape[0]}")
            offsets = offsets[0]
        return cls(data=offsets.detach().cpu().numpy().transpose(1, 2, 0).copy(), kernel_size=kernel_size)


@dataclasses.dataclass(frozen=True)
class ConvKernel:
    weight: torch.Tensor
    bias: Optional[torch.Tensor] = None

    def __post_init__(self):
        if self.weight.dim() != 4 or self.weight.shape[-1] != self.weight.shape[-2]:
            raise LightFieldShapeError(f"Kernel weights must be [C_out, C_in, k, k], got {tuple(self.weight.shape)}")
        if self.weight.shape[-1] % 2 == 0:
            raise LightFieldShapeError(f"The kernel size must be odd, got {self.weight.shape[-1]}")
        if self.bias is not None and self.bias.shape != (self.weight.shape[0],):
            raise LightFieldShapeError(f"Bias must be [{self.weight.shape[0]}], got {tuple(self.bias.shape)}")

    @property
    def kernel_size(self) -> int:
        return self.weight.shape[-1]

    @property
    def taps(self) -> List[Tuple[int, int]]:
        return kernel_taps(self.kernel_size)


def _gather_bilinear(feature: torch.Tensor, y: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
    """
    Samples ``feature`` ``[B, C, H, W]`` at the coordinates ``y``, ``x`` (both ``[B, *S]``).

    Returns ``[B, C, *S]``.
    """
    batch, channels, height, width = feature.shape
    sample_shape = y.shape[1:]
    y = y.reshape(batch, -1)
    x = x.reshape(batch, -1)

    # ceil(.) - 1 picks the lower-left cell at integer coordinates
    y0 = torch.ceil(y) - 1
    x0 = torch.ceil(x) - 1
    ly = y - y0
    lx = x - x0
    y0 = y0.long()
    x0 = x0.long()

    flat = feature.reshape(batch, channels, height * width)
    result = feature.new_zeros(batch, channels, y.shape[1])
    for dy, wy in ((0, 1 - ly), (1, ly)):
        for dx, wx in ((0, 1 - lx), (1, lx)):
            yy = y0 + dy
            xx = x0 + dx
            valid = (yy >= 0) & (yy < height) & (xx >= 0) & (xx < width)
            index = (yy.clamp(0, height - 1) * width + xx.clamp(0, width - 1)).unsqueeze(1)
            values = torch.gather(flat, 2, index.expand(batch, channels, -1))
            result = result + values * (wy * wx * valid.to(feature.dtype)).unsqueeze(1)
    return result.reshape(batch, channels, *sample_shape)


def bilinear_sample(
    feature: torch.Tensor, y: Union[float, torch.Tensor], x: Union[float, torch.Tensor]
) -> torch.Tensor:
    """
    Bilinear read of a ``[C, H, W]`` feature map at fractional coordinates.

    ``y`` and ``x`` are scalars or broadcastable tensors of shape ``S``; the result is ``[C]`` or ``[C, *S]``.
    Positions outside ``[0, H - 1] x [0, W - 1]`` read zeros.
    """
    if feature.dim() != 3:
        raise LightFieldShapeError(f"bilinear_sample expects a [C, H, W] feature, got {tuple(feature.shape)}")
    y = torch.as_tensor(y, dtype=feature.dtype, device=feature.device)
    x = torch.as_tensor(x, dtype=feature.dtype, device=feature.device)
    y, x = torch.broadcast_tensors(y, x)
    return _gather_bilinear(feature.unsqueeze(0), y.unsqueeze(0), x.unsqueeze(0))[0]


def deform_conv2d(
    feature: torch.Tensor,
    offsets: torch.Tensor,
    weight: torch.Tensor,
    bias: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """
    Deformable convolution of ``feature`` ``[B, C_in, H, W]`` with per-position offsets ``[B, 2k^2, H, W]``.

    Returns ``[B, C_out, H, W]``.
    """
    if feature.dim() != 4 or offsets.dim() != 4:
        raise LightFieldShapeError(
            f"Expected 4D feature and offsets, got {tuple(feature.shape)} and {tuple(offsets.shape)}"
        )
    kernel = ConvKernel(weight, bias)
    k = kernel.kernel_size
    batch, in_channels, height, width = feature.shape
    out_channels = weight.shape[0]
    if weight.shape[1] != in_channels:
        raise LightFieldShapeError(f"Kernel expects {weight.shape[1]} input channels, the feature has {in_channels}")
    if offsets.shape != (batch, 2 * k * k, height, width):
        raise LightFieldShapeError(
            f"Offsets must be {(batch, 2 * k * k, height, width)} for this feature, got {tuple(offsets.shape)}"
        )

    taps = torch.tensor(kernel.taps, dtype=feature.dtype, device=feature.device)
    grid_y = torch.arange(height, dtype=feature.dtype, device=feature.device).view(1, 1, height, 1)
    grid_x = torch.arange(width, dtype=feature.dtype, device=feature.device).view(1, 1, 1, width)
    offsets = offsets.reshape(batch, k * k, 2, height, width)
    # [B, k*k, H, W]
    y = grid_y + taps[:, 0].view(1, -1, 1, 1) + offsets[:, :, 0]
    x = grid_x + taps[:, 1].view(1, -1, 1, 1) + offsets[:, :, 1]

    sampled = _gather_bilinear(feature, y, x)
    output = torch.einsum("bcnhw,ocn->bohw", sampled, weight.reshape(out_channels, in_channels, k * k))
    if bias is not None:
        output = output + bias.view(1, -1, 1, 1)
    return output


class DeformConv2d(nn.Module):
    def __init__(self, in_channels: int, out_channels: int, kernel_size: int = 3, bias: bool = True):
        super().__init__()
        kernel_taps(kernel_size)
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.weight = nn.Parameter(torch.empty(out_channels, in_channels, kernel_size, kernel_size))
        if bias:
            self.bias = nn.Parameter(torch.empty(out_channels))
        else:
            self.register_parameter("bias", None)
        self.reset_parameters()

    @property
    def offset_channels(self) -> int:
        return 2 * self.kernel_size**2

    def reset_parameters(self) -> None:
        # Same default as nn.Conv2d
        nn.init.kaiming_uniform_(self.weight, a=math.sqrt(5))
        if self.bias is not None:
            fan_in = self.in_channels * self.kernel_size**2
            bound = 1 / math.sqrt(fan_in)
            nn.init.uniform_(self.bias, -bound, bound)

    def forward(self, feature: torch.Tensor, offsets: torch.Tensor) -> torch.Tensor:
        return deform_conv2d(feature, offsets, self.weight, self.bias)

    def extra_repr(self) -> str:
        return (
            f"{self.in_channels}, {self.out_channels}, kernel_size={self.kernel_size}, "
            f"offset_channels={self.offset_channels}, bias={self.bias is not None}"
        )


class DeformConvGradients(NamedTuple):
    feature: torch.Tensor
    weight: torch.Tensor
    bias: Optional[torch.Tensor]
    offsets: torch.Tensor


def deform_conv2d_grad(
    feature: torch.Tensor,
    offsets: torch.Tensor,
    weight: torch.Tensor,
    bias: Optional[torch.Tensor] = None,
    grad_output: Optional[torch.Tensor] = None,
) -> DeformConvGradients:
    """
    Gradients of ``sum(deform_conv2d(...) * grad_output)`` with respect to every input of the forward map.

    ``grad_output`` defaults to ones, i.e. the gradients of the plain sum of the output.
    """
    inputs = [feature, weight, offsets] + ([bias] if bias is not None else [])
    inputs = [tensor.detach().clone().requires_grad_(True) for tensor in inputs]
    feature_, weight_, offsets_ = inputs[:3]
    bias_ = inputs[3] if bias is not None else None

    output = deform_conv2d(feature_, offsets_, weight_, bias_)
    if grad_output is None:
        grad_output = torch.ones_like(output)
    grads = torch.autograd.grad(output, inputs, grad_outputs=grad_output, allow_unused=True)
    grads = [torch.zeros_like(t) if g is None else g for t, g in zip(inputs, grads)]
    return DeformConvGradients(
        feature=grads[0],
        weight=grads[1],
        bias=grads[3] if bias is not None else None,
        offsets=grads[2],
    )


def gradient_check(
    feature: torch.Tensor,
    offsets: torch.Tensor,
    weight: torch.Tensor,
    bias: Optional[torch.Tensor] = None,
    step: float = 1e-4,
    scheme: str = "central",
    seed: int = 0,
) -> Dict[str, float]:
    """
    Compares the autograd gradients against finite differences in float64.

    The scalar checked is ``sum(output * g)`` for a fixed random ``g``. Returns, per gradient target, the
    normwise relative error ``max|numeric - analytic| / max(max|analytic|, max|numeric|)``.

    Args:
        scheme: ``"central"`` for ``(f(t + h) - f(t - h)) / 2h``, ``"backward"`` for ``(f(t) - f(t - h)) / h``;
            the latter matches the left-cell convention at exactly integer sampling positions.
    """
    if scheme not in ("central", "backward"):
        raise ValueError(f"Unknown finite-difference scheme {scheme}")

    tensors = {
        "feature": feature.detach().to(torch.float64).clone(),
        "weight": weight.detach().to(torch.float64).clone(),
        "bias": None if bias is None else bias.detach().to(torch.float64).clone(),
        "offsets": offsets.detach().to(torch.float64).clone(),
    }
    with torch.no_grad():
        output_shape = deform_conv2d(tensors["feature"], tensors["offsets"], tensors["weight"], tensors["bias"]).shape
    generator = torch.Generator().manual_seed(seed)
    upstream = torch.randn(output_shape, dtype=torch.float64, generator=generator)

    def objective() -> float:
        with torch.no_grad():
            out = deform_conv2d(tensors["feature"], tensors["offsets"], tensors["weight"], tensors["bias"])
            return float((out * upstream).sum())

    analytic = deform_conv2d_grad(
        tensors["feature"], tensors["offsets"], tensors["weight"], tensors["bias"], grad_output=upstream
    )._asdict()

    errors = {}
    for name in GRADIENT_TARGETS:
        target = tensors[name]
        if target is None:
            continue
        numeric = torch.zeros_like(target)
        flat_target = target.view(-1)
        flat_numeric = numeric.view(-1)
        for i in range(flat_target.numel()):
            original = float(flat_target[i])
            if scheme == "central":
                flat_target[i] = original + step
                f_plus = objective()
                flat_target[i] = original - step
                f_minus = objective()
                flat_numeric[i] = (f_plus - f_minus) / (2 * step)
            else:
                f_center = objective()
                flat_target[i] = original - step
                f_minus = objective()
                flat_numeric[i] = (f_center - f_minus) / step
            flat_target[i] = original

        reference = analytic[name]
        scale = max(float(reference.abs().max()), float(numeric.abs().max()), 1e-12)
        errors[name] = float((numeric - reference).abs().max()) / scale
    return errors
