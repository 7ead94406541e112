"""Parameter and FLOP accounting of the super-resolution network."""

from typing import Dict, Sequence

import torch
from torch import nn
from transformers.utils import logging

from lfdfnet.models.hf_models.config import LfDfnetConfig
from lfdfnet.models.hf_models.hf_lfdfnet import LfDfnetModel
from lfdfnet.models.layers.deform_conv import DeformConv2d

logger = logging.get_logger(__name__)

# Multiply-accumulates of one bilinear read (four weighted neighbours)
BILINEAR_MACS = 4
# Reference figures of the full-size model for a 5x5x32x32 input at 2x
REFERENCE_PARAMS = 3.94e6
REFERENCE_FLOPS = 57.22e9


def count_params(cfg: LfDfnetConfig) -> int:
    """Exact number of parameters; modules used twice (the shared deformable kernels) are counted once."""
    model = LfDfnetModel(cfg)
    return sum(parameter.numel() for parameter in model.parameters())


def _conv_macs(module: nn.Conv2d, output: torch.Tensor) -> int:
    kernel_h, kernel_w = module.kernel_size
    return output.numel() * (module.in_channels // module.groups) * kernel_h * kernel_w


def _deform_conv_macs(module: DeformConv2d, output: torch.Tensor) -> int:
    batch, _, height, width = output.shape
    taps = module.kernel_size**2
    weighting = output.numel() * module.in_channels * taps
    sampling = batch * module.in_channels * taps * height * width * BILINEAR_MACS
    return weighting + sampling


def count_macs(model: LfDfnetModel, input_shape: Sequence[int]) -> Dict[str, int]:
    """Multiply-accumulates of one forward pass on a ``(A, A, h, w)`` input, split by layer type."""
    totals = {"conv": 0, "deform_conv": 0}

    def conv_hook(module, inputs, output):
        totals["conv"] += _conv_macs(module, output)

    def deform_hook(module, inputs, output):
        totals["deform_conv"] += _deform_conv_macs(module, output)

    handles = []
    for module in model.modules():
        if isinstance(module, nn.Conv2d):
            handles.append(module.register_forward_hook(conv_hook))
        elif isinstance(module, DeformConv2d):
            handles.append(module.register_forward_hook(deform_hook))
    try:
        parameter = next(model.parameters())
        dummy_input = torch.zeros((1, *input_shape), dtype=parameter.dtype, device=parameter.device)
        with torch.no_grad():
            model(lr_views=dummy_input)
    finally:
        for handle in handles:
            handle.remove()
    return totals


def estimate_flops(cfg: LfDfnetConfig, input_shape: Sequence[int]) -> float:
    """FLOPs (2 x multiply-accumulates) of convolutions and bilinear sampling for one ``(A, A, h, w)`` input."""
    macs = count_macs(LfDfnetModel(cfg), input_shape)
    return 2.0 * sum(macs.values())


def complexity_report(cfg: LfDfnetConfig, input_shape: Sequence[int] = None) -> Dict[str, float]:
    """Parameters and FLOPs next to the reference figures of the full-size model."""
    if input_shape is None:
        input_shape = (cfg.angular_resolution, cfg.angular_resolution, 32, 32)
    params = count_params(cfg)
    flops = estimate_flops(cfg, input_shape)
    report = {
        "params": params,
        "flops": flops,
        "reference_params": REFERENCE_PARAMS,
        "reference_flops": REFERENCE_FLOPS,
        "params_deviation": (params - REFERENCE_PARAMS) / REFERENCE_PARAMS,
        "flops_deviation": (flops - REFERENCE_FLOPS) / REFERENCE_FLOPS,
    }
    logger.info("Model complexity: %.3fM parameters, %.2fG FLOPs", params / 1e6, flops / 1e9)
    return report
