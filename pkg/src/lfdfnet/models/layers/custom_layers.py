import dataclasses
from typing import Optional, Sequence, Tuple

import torch
import torch.nn.functional as F
from torch import nn

from lfdfnet.exceptions import LightFieldShapeError


@dataclasses.dataclass
class BlockConfig:
    channels: int = 32
    aspp_dilations: Tuple[int, ...] = (1, 2, 4)
    leaky_slope: float = 0.1
    aspp_blocks_per_module: int = 2
    # None means 4 * channels and channels, i.e. 128 split 32 / 96 at the default width
    imdb_width: Optional[int] = None
    imdb_narrow: Optional[int] = None
    imdb_stages: int = 3

    def __post_init__(self):
        if self.imdb_width is None:
            self.imdb_width = 4 * self.channels
        if self.imdb_narrow is None:
            self.imdb_narrow = self.channels
        if not 0 < self.imdb_narrow < self.imdb_width:
            raise LightFieldShapeError(
                f"The IMDB narrow width {self.imdb_narrow} must lie strictly inside (0, {self.imdb_width})"
            )

    @property
    def imdb_wide(self) -> int:
        return self.imdb_width - self.imdb_narrow


def conv1x1(in_channels: int, out_channels: int) -> nn.Conv2d:
    return nn.Conv2d(in_channels, out_channels, kernel_size=1, bias=True)


def conv3x3(in_channels: int, out_channels: int, dilation: int = 1) -> nn.Conv2d:
    return nn.Conv2d(in_channels, out_channels, kernel_size=3, padding=dilation, dilation=dilation, bias=True)


def _check_channels(module: nn.Module, features: torch.Tensor, expected: int) -> None:
    if features.dim() != 4 or features.shape[1] != expected:
        raise LightFieldShapeError(
            f"{type(module).__name__} expects [B, {expected}, H, W] features, got {tuple(features.shape)}"
        )


class ResidualASPPBlock(nn.Module):
    """Parallel dilated 3x3 convolutions, each followed by a LeakyReLU, fused by a 1x1 conv and added to the input."""

    def __init__(self, channels: int, dilations: Sequence[int] = (1, 2, 4), leaky_slope: float = 0.1):
        super(ResidualASPPBlock, self).__init__()
        self.channels = channels
        self.atrous = nn.ModuleList([conv3x3(channels, channels, dilation=rate) for rate in dilations])
        self.act = nn.LeakyReLU(negative_slope=leaky_slope)
        self.fuse = conv1x1(channels * len(dilations), channels)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        _check_channels(self, features, self.channels)
        branches = [self.act(atrous(features)) for atrous in self.atrous]
        return self.fuse(torch.cat(branches, dim=1)) + features


class ResidualASPPModule(nn.Module):
    def __init__(
        self,
        channels: int,
        num_blocks: int = 2,
        dilations: Sequence[int] = (1, 2, 4),
        leaky_slope: float = 0.1,
    ):
        super(ResidualASPPModule, self).__init__()
        self.blocks = nn.Sequential(
            *[ResidualASPPBlock(channels, dilations, leaky_slope) for _ in range(num_blocks)]
        )

    @classmethod
    def from_block_config(cls, blocks: BlockConfig) -> "ResidualASPPModule":
        return cls(blocks.channels, blocks.aspp_blocks_per_module, blocks.aspp_dilations, blocks.leaky_slope)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        return self.blocks(features)


class ResidualBlock(nn.Module):
    def __init__(self, channels: int, leaky_slope: float = 0.1):
        super(ResidualBlock, self).__init__()
        self.channels = channels
        self.conv1 = conv3x3(channels, channels)
        self.act = nn.LeakyReLU(negative_slope=leaky_slope)
        self.conv2 = conv3x3(channels, channels)

    @classmethod
    def from_block_config(cls, blocks: BlockConfig) -> "ResidualBlock":
        return cls(blocks.channels, blocks.leaky_slope)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        _check_channels(self, features, self.channels)
        return self.conv2(self.act(self.conv1(features))) + features


class IMDB(nn.Module):
    """
    Information multi-distillation block.

    A head 3x3 conv widens the input to ``width`` channels. Each of the ``stages`` distillation steps splits the
    current feature into a preserved narrow part and a wide remainder, and the remainder is refined back to
    ``width`` channels by a 3x3 conv. The preserved parts and the last refinement are concatenated
    (``stages * narrow + width`` channels), fused by a 1x1 conv and added to the block input.
    """

    def __init__(
        self,
        in_channels: int,
        width: int = 128,
        narrow: int = 32,
        stages: int = 3,
        leaky_slope: float = 0.1,
    ):
        super(IMDB, self).__init__()
        if stages < 1:
            raise LightFieldShapeError(f"An IMDB needs at least one distillation stage, got {stages}")
        if not 0 < narrow < width:
            raise LightFieldShapeError(f"The narrow width {narrow} must lie strictly inside (0, {width})")
        self.in_channels = in_channels
        self.width = width
        self.narrow = narrow
        self.wide = width - narrow
        self.head = conv3x3(in_channels, width)
        self.refine = nn.ModuleList([conv3x3(self.wide, width) for _ in range(stages)])
        self.act = nn.LeakyReLU(negative_slope=leaky_slope)
        self.bottleneck = conv1x1(self.bottleneck_channels, in_channels)

    @classmethod
    def from_block_config(cls, blocks: BlockConfig) -> "IMDB":
        return cls(
            blocks.channels,
            width=blocks.imdb_width,
            narrow=blocks.imdb_narrow,
            stages=blocks.imdb_stages,
            leaky_slope=blocks.leaky_slope,
        )

    @property
    def stages(self) -> int:
        return len(self.refine)

    @property
    def bottleneck_channels(self) -> int:
        return len(self.refine) * self.narrow + self.width

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        _check_channels(self, features, self.in_channels)
        current = self.act(self.head(features))
        preserved = []
        for stage, refine in enumerate(self.refine):
            distilled, remaining = torch.split(current, [self.narrow, self.wide], dim=1)
            preserved.append(distilled)
            current = refine(remaining)
            if stage < self.stages - 1:
                current = self.act(current)
        return self.bottleneck(torch.cat(preserved + [current], dim=1)) + features


def pixel_shuffle(features: torch.Tensor, alpha: int) -> torch.Tensor:
    """
    ``[B, alpha^2 * C, H, W] -> [B, C, alpha * H, alpha * W]``.

    ``out[c, alpha * h + i, alpha * w + j] = in[c * alpha^2 + i * alpha + j, h, w]``
    """
    if alpha < 1 or features.shape[-3] % (alpha * alpha):
        raise LightFieldShapeError(f"{features.shape[-3]} channels cannot be shuffled by a factor {alpha}")
    return F.pixel_shuffle(features, alpha)


def pixel_unshuffle(features: torch.Tensor, alpha: int) -> torch.Tensor:
    if alpha < 1 or features.shape[-2] % alpha or features.shape[-1] % alpha:
        raise LightFieldShapeError(f"Spatial size {tuple(features.shape[-2:])} is not divisible by {alpha}")
    return F.pixel_unshuffle(features, alpha)
