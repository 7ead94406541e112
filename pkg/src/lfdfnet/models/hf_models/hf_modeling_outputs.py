from dataclasses import dataclass
from typing import Optional, Tuple

import torch
from transformers.modeling_outputs import ModelOutput


@dataclass
class LfDfnetOutput(ModelOutput):
    """
    Output of the light field super-resolution network.

    Args:
        loss (`torch.FloatTensor` of shape `()`, *optional*, returned when `labels` is provided):
            Mean absolute error between `sr_views` and `labels` over every view and pixel.
        sr_views (`torch.FloatTensor` of shape `(batch_size, A, A, alpha * height, alpha * width)`):
            Super-resolved Y views, not clamped.
        collect_offsets (`tuple(torch.FloatTensor)`, *optional*, returned when `output_offsets=True`):
            One tensor per ADAM of shape `(batch_size, A * A - 1, 2 * k * k, height, width)`, the offsets aligning
            every side view to the center view, side views in raster order.
        distribute_offsets (`tuple(torch.FloatTensor)`, *optional*, returned when `output_offsets=True`):
            Same layout, the offsets aligning the fused feature back to every side view.
    """

    loss: Optional[torch.FloatTensor] = None
    sr_views: torch.FloatTensor = None
    collect_offsets: Optional[Tuple[torch.FloatTensor, ...]] = None
    distribute_offsets: Optional[Tuple[torch.FloatTensor, ...]] = None
