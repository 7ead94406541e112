import os
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
import torch
from torch import nn
from transformers import PreTrainedModel
from transformers.utils import logging

from lfdfnet.data_generators.light_field import ColorSpace, LightField, merge_luma_chroma, split_luma_chroma
from lfdfnet.data_generators.resize import resize_bicubic
from lfdfnet.exceptions import ColorSpaceError, LightFieldShapeError
from lfdfnet.models.hf_models.config import LfDfnetConfig
from lfdfnet.models.hf_models.hf_modeling_outputs import LfDfnetOutput
from lfdfnet.models.layers.custom_layers import (
    IMDB,
    BlockConfig,
    ResidualASPPModule,
    ResidualBlock,
    conv1x1,
    conv3x3,
)
from lfdfnet.models.layers.deform_conv import DeformConv2d
from lfdfnet.utils.model_utils import write_json

logger = logging.get_logger(__name__)


def split_center(views: torch.Tensor, center_index: int) -> Tuple[torch.Tensor, torch.Tensor]:
    """``[B, V, C, h, w]`` -> center ``[B, C, h, w]`` and the side views ``[B, V - 1, C, h, w]`` in raster order."""
    return views[:, center_index], torch.cat([views[:, :center_index], views[:, center_index + 1 :]], dim=1)


def merge_center(center: torch.Tensor, sides: torch.Tensor, center_index: int) -> torch.Tensor:
    return torch.cat([sides[:, :center_index], center.unsqueeze(1), sides[:, center_index:]], dim=1)


def _context_module(blocks: BlockConfig, use_aspp: bool) -> nn.Module:
    if use_aspp:
        return ResidualASPPModule.from_block_config(blocks)
    return nn.Sequential(*[ResidualBlock.from_block_config(blocks) for _ in range(blocks.aspp_blocks_per_module)])


class FeatureExtractor(nn.Module):
    """Shared by all views: a 1x1 conv lifting Y to C channels followed by residual ASPP / residual units."""

    def __init__(self, config: LfDfnetConfig):
        super(FeatureExtractor, self).__init__()
        blocks = config.block_config()
        self.init_conv = conv1x1(1, config.channels)
        units = []
        for _ in range(config.fem_units):
            units.append(_context_module(blocks, use_aspp=config.variant != "no_aspp_fem"))
            units.append(ResidualBlock.from_block_config(blocks))
        self.body = nn.Sequential(*units)

    def forward(self, views: torch.Tensor) -> torch.Tensor:
        # (num_views, 1, h, w) -> (num_views, C, h, w)
        return self.body(self.init_conv(views))


class OffsetBranch(nn.Module):
    def __init__(self, config: LfDfnetConfig):
        super(OffsetBranch, self).__init__()
        self.reduce = conv1x1(2 * config.channels, config.channels)
        self.context = _context_module(config.block_config(), use_aspp=config.variant != "no_aspp_ofb")
        # Zero-initialised so that every deformable conv starts as its rigid counterpart
        self.offset_head = conv1x1(config.channels, config.offset_channels)

    def forward(self, features: torch.Tensor, reference: torch.Tensor) -> torch.Tensor:
        """Offsets aligning ``features`` to ``reference``, both ``[N, C, h, w]``; returns ``[N, 2k^2, h, w]``."""
        if features.shape != reference.shape:
            raise LightFieldShapeError(
                f"The offset branch needs matching features, got {tuple(features.shape)} and {tuple(reference.shape)}"
            )
        return self.offset_head(self.context(self.reduce(torch.cat([features, reference], dim=1))))


class ADAM(nn.Module):
    """
    Angular deformable alignment module: collect the side views into the center view, then distribute the fused
    feature back to every side view.

    The offset branch and the deformable convolution are single modules used by both directions. The
    ``no_dcn``, ``no_adam`` and ``no_dist`` variants replace the alignment, the whole module or the distribution.
    """

    def __init__(self, config: LfDfnetConfig):
        super(ADAM, self).__init__()
        self.variant = config.variant
        self.num_views = config.num_views
        self.channels = config.channels
        self.offset_channels = config.offset_channels

        if self.variant == "no_adam":
            self.view_block = ResidualBlock.from_block_config(config.block_config())
            return

        if self.variant == "no_dcn":
            self.align_conv = conv3x3(config.channels, config.channels)
        else:
            self.offset_branch = OffsetBranch(config)
            self.deform_conv = DeformConv2d(config.channels, config.channels, config.kernel_size)
        self.fusion = conv1x1(config.num_views * config.channels, config.num_views * config.channels)
        self.squeeze = conv1x1(2 * config.channels, config.channels)
        self.act = nn.LeakyReLU(negative_slope=config.leaky_slope)
        if self.variant == "no_dist":
            self.side_block = ResidualBlock.from_block_config(config.block_config())

    def _align(self, features: torch.Tensor, reference: torch.Tensor) -> Tuple[torch.Tensor, Optional[torch.Tensor]]:
        if self.variant == "no_dcn":
            return self.align_conv(features), None
        offsets = self.offset_branch(features, reference)
        return self.deform_conv(features, offsets), offsets

    def collect(
        self, center: torch.Tensor, sides: torch.Tensor
    ) -> Tuple[torch.Tensor, Optional[torch.Tensor]]:
        """
        Aligns every side view to the center view and fuses them.

        Returns the fused feature ``[B, A^2 * C, h, w]`` (aligned sides in raster order, center last) and the
        collection offsets ``[B, A^2 - 1, 2k^2, h, w]``.
        """
        batch, num_sides, channels, height, width = sides.shape
        offsets = None
        aligned = sides
        if num_sides:
            flat_sides = sides.reshape(batch * num_sides, channels, height, width)
            flat_center = center.unsqueeze(1).expand(-1, num_sides, -1, -1, -1).reshape(flat_sides.shape)
            aligned, offsets = self._align(flat_sides, flat_center)
            aligned = aligned.reshape(batch, num_sides, channels, height, width)
            if offsets is not None:
                offsets = offsets.reshape(batch, num_sides, self.offset_channels, height, width)
        stacked = torch.cat([aligned, center.unsqueeze(1)], dim=1)
        fused = self.act(self.fusion(stacked.reshape(batch, self.num_views * channels, height, width)))
        return fused, offsets

    def distribute(
        self, fused: torch.Tensor, center: torch.Tensor, sides: torch.Tensor
    ) -> Tuple[torch.Tensor, torch.Tensor, Optional[torch.Tensor]]:
        """Splits ``fused`` in collection order, aligns each part back to its side view and squeezes 2C -> C."""
        batch, num_sides, channels, height, width = sides.shape
        if fused.shape[1] != self.num_views * channels:
            raise LightFieldShapeError(
                f"The fused feature must have {self.num_views * channels} channels, got {fused.shape[1]}"
            )
        parts = fused.reshape(batch, self.num_views, channels, height, width)
        fused_sides, fused_center = parts[:, :num_sides], parts[:, num_sides]

        offsets = None
        new_sides = sides
        if num_sides:
            flat_sides = sides.reshape(batch * num_sides, channels, height, width)
            if self.variant == "no_dist":
                new_sides = self.side_block(flat_sides)
            else:
                aligned, offsets = self._align(fused_sides.reshape(flat_sides.shape), flat_sides)
                new_sides = self.act(self.squeeze(torch.cat([aligned, flat_sides], dim=1)))
                if offsets is not None:
                    offsets = offsets.reshape(batch, num_sides, self.offset_channels, height, width)
            new_sides = new_sides.reshape(batch, num_sides, channels, height, width)

        # The center view is updated without any deformable sampling
        new_center = self.act(self.squeeze(torch.cat([fused_center, center], dim=1)))
        return new_center, new_sides, offsets

    def forward(
        self, center: torch.Tensor, sides: torch.Tensor
    ) -> Tuple[torch.Tensor, torch.Tensor, Optional[torch.Tensor], Optional[torch.Tensor]]:
        if self.variant == "no_adam":
            batch, num_sides, channels, height, width = sides.shape
            new_center = self.view_block(center)
            new_sides = sides
            if num_sides:
                new_sides = self.view_block(sides.reshape(batch * num_sides, channels, height, width)).reshape(
                    sides.shape
                )
            return new_center, new_sides, None, None

        fused, collect_offsets = self.collect(center, sides)
        new_center, new_sides, distribute_offsets = self.distribute(fused, center, sides)
        return new_center, new_sides, collect_offsets, distribute_offsets


class Reconstruction(nn.Module):
    """Per-view reconstruction shared by all views: 1x1 adapter, IMDBs, then sub-pixel upsampling to one channel."""

    def __init__(self, config: LfDfnetConfig):
        super(Reconstruction, self).__init__()
        self.adapter = conv1x1(config.reconstruction_channels, config.channels)
        self.imdbs = nn.Sequential(*[IMDB.from_block_config(config.block_config()) for _ in range(config.num_imdbs)])
        self.expand = conv1x1(config.channels, config.upscale_factor**2 * config.channels)
        self.shuffle = nn.PixelShuffle(config.upscale_factor)
        self.to_y = conv1x1(config.channels, 1)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        return self.to_y(self.shuffle(self.expand(self.imdbs(self.adapter(features)))))


class LfDfnetPreTrainedModel(PreTrainedModel):
    """
    An abstract class to handle weights initialization and a simple interface for downloading and loading pretrained
    models.
    """

    config_class = LfDfnetConfig
    base_model_prefix = "lfdfnet"
    main_input_name = "lr_views"
    supports_gradient_checkpointing = False

    def _init_weights(self, module):
        """Kaiming for every conv, zeros for the last conv of every offset branch."""
        if isinstance(module, (nn.Conv2d, DeformConv2d)):
            nn.init.kaiming_normal_(
                module.weight, a=self.config.leaky_slope, mode="fan_in", nonlinearity="leaky_relu"
            )
            if module.bias is not None:
                nn.init.zeros_(module.bias)
        elif isinstance(module, OffsetBranch):
            # apply() visits children first, so this runs after offset_head got its Kaiming init
            nn.init.zeros_(module.offset_head.weight)
            nn.init.zeros_(module.offset_head.bias)


class LfDfnetModel(LfDfnetPreTrainedModel):
    def __init__(self, config: LfDfnetConfig):
        super().__init__(config)
        self.feature_extractor = FeatureExtractor(config)
        self.adams = nn.ModuleList([ADAM(config) for _ in range(config.num_adams)])
        self.reconstruction = Reconstruction(config)

        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(config.initializer_seed)
            self.post_init()

    def _check_input(self, lr_views: torch.Tensor) -> None:
        a = self.config.angular_resolution
        if lr_views.dim() != 5 or lr_views.shape[1] != a or lr_views.shape[2] != a:
            raise LightFieldShapeError(
                f"Expected Y views of shape [B, {a}, {a}, h, w], got {tuple(lr_views.shape)}"
            )

    def forward(
        self,
        lr_views: torch.Tensor,
        labels: Optional[torch.Tensor] = None,
        output_offsets: Optional[bool] = False,
        return_dict: Optional[bool] = True,
        **kwargs,
    ) -> Union[LfDfnetOutput, Tuple]:
        self._check_input(lr_views)
        batch, a, _, height, width = lr_views.shape
        num_views = a * a
        channels = self.config.channels
        alpha = self.config.upscale_factor
        center_index = self.config.center_view_index

        # (batch_size * A * A, 1, h, w) -> (batch_size, A * A, C, h, w)
        features = self.feature_extractor(lr_views.reshape(batch * num_views, 1, height, width))
        features = features.reshape(batch, num_views, channels, height, width)

        stage_outputs = [features]
        collect_offsets, distribute_offsets = [], []
        center, sides = split_center(features, center_index)
        for adam in self.adams:
            center, sides, collected, distributed = adam(center, sides)
            stage_outputs.append(merge_center(center, sides, center_index))
            collect_offsets.append(collected)
            distribute_offsets.append(distributed)

        # (batch_size * A * A, (K + 1) * C, h, w)
        hierarchy = torch.cat(stage_outputs, dim=2).reshape(batch * num_views, -1, height, width)
        sr_views = self.reconstruction(hierarchy).reshape(batch, a, a, alpha * height, alpha * width)
        if self.config.global_residual:
            sr_views = sr_views + resize_bicubic(lr_views.detach(), alpha, clamp=False).to(sr_views.dtype)

        loss = None
        if labels is not None:
            loss = torch.mean(torch.abs(sr_views - labels.to(sr_views.dtype)))

        if not output_offsets:
            collect_offsets, distribute_offsets = None, None
        else:
            collect_offsets, distribute_offsets = tuple(collect_offsets), tuple(distribute_offsets)

        if not return_dict:
            return tuple(v for v in (loss, sr_views, collect_offsets, distribute_offsets) if v is not None)

        return LfDfnetOutput(
            loss=loss,
            sr_views=sr_views,
            collect_offsets=collect_offsets,
            distribute_offsets=distribute_offsets,
        )

    def super_resolve(self, lf: LightField) -> LightField:
        """Super-resolves a Y light field; the result is clipped to the value range of ``lf``."""
        if lf.color_space != ColorSpace.Y:
            raise ColorSpaceError(f"The network super-resolves Y light fields, got {lf.color_space.value}")
        parameter = next(self.parameters())
        lr_views = torch.from_numpy(np.ascontiguousarray(lf.data[..., 0])).to(parameter.device, parameter.dtype)
        was_training = self.training
        self.eval()
        with torch.no_grad():
            sr_views = self(lr_views=lr_views.unsqueeze(0)).sr_views[0].clamp(*lf.value_range)
        self.train(was_training)
        data = sr_views.cpu().numpy().astype(np.float32)[..., None]
        return LightField(data=data, color_space=ColorSpace.Y, value_range=lf.value_range)

    def super_resolve_rgb(self, lf: LightField) -> LightField:
        """Y through the network, Cb / Cr upscaled bicubically, recombined to RGB."""
        luma, chroma = split_luma_chroma(lf)
        sr_luma = self.super_resolve(luma)
        # (U, V, 2, h, w) so the resize runs over the spatial axes
        chroma_up = resize_bicubic(np.moveaxis(chroma, -1, 2), self.config.upscale_factor, value_range=lf.value_range)
        return merge_luma_chroma(sr_luma, np.moveaxis(chroma_up, 2, -1).astype(sr_luma.data.dtype))


def model_manifest(model: LfDfnetModel, seed: Optional[int] = None) -> Dict[str, Any]:
    """The full configuration, the design decisions, the parameter count and the creation seed."""
    return {
        "config": model.config.to_dict(),
        "design_decisions": model.config.design_decisions(),
        "num_parameters": model.num_parameters(),
        "creation_seed": model.config.initializer_seed if seed is None else seed,
    }


def write_model_manifest(model: LfDfnetModel, path: Union[str, os.PathLike], seed: Optional[int] = None):
    return write_json(model_manifest(model, seed), path)
