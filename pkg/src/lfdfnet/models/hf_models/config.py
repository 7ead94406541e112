from typing import Any, Dict, Sequence

from transformers import PretrainedConfig

from lfdfnet.exceptions import ConfigError
from lfdfnet.models.layers.custom_layers import BlockConfig

VARIANTS = ("full", "no_dcn", "no_adam", "no_dist", "no_aspp_fem", "no_aspp_ofb")


class LfDfnetConfig(PretrainedConfig):
    """
    Architecture hyperparameters of the light field super-resolution network.

    Args:

        angular_resolution (`int`, *optional*, defaults to 5):
            Angular size A of the ``A x A`` input views. Must be odd so a center view exists.
        channels (`int`, *optional*, defaults to 32):
            Feature depth C of every view.
        kernel_size (`int`, *optional*, defaults to 3):
            Kernel size of the deformable convolutions; the offset branch predicts ``2 * k * k`` channels.
        num_adams (`int`, *optional*, defaults to 3):
            Number K of cascaded angular deformable alignment modules.
        num_imdbs (`int`, *optional*, defaults to 4):
            Number N of information multi-distillation blocks in the reconstruction module.
        upscale_factor (`int`, *optional*, defaults to 2):
            Super-resolution factor alpha.
        variant (`str`, *optional*, defaults to `"full"`):
            One of `"full"`, `"no_dcn"`, `"no_adam"`, `"no_dist"`, `"no_aspp_fem"`, `"no_aspp_ofb"`.
        aspp_dilations (`List[int]`, *optional*, defaults to `[1, 2, 4]`):
            Dilation rates of the residual ASPP blocks.
        leaky_slope (`float`, *optional*, defaults to 0.1):
            Negative slope of every LeakyReLU.
        aspp_blocks_per_module (`int`, *optional*, defaults to 2):
            Residual ASPP blocks chained in one residual ASPP module.
        fem_units (`int`, *optional*, defaults to 2):
            Units of the feature extractor, each a residual ASPP module followed by a residual block.
        imdb_width (`int`, *optional*):
            Channels after the IMDB head conv. `None` means ``4 * channels``.
        imdb_narrow (`int`, *optional*):
            Channels preserved at each distillation step. `None` means ``channels``.
        imdb_stages (`int`, *optional*, defaults to 3):
            Distillation steps per IMDB.
        global_residual (`bool`, *optional*, defaults to `True`):
            Add the bicubic upscaling of every input view to the network output.
        initializer_seed (`int`, *optional*, defaults to 0):
            Seed of the weight initialisation performed when the model is built.
    """

    model_type = "lfdfnet"

    def __init__(
        self,
        angular_resolution: int = 5,
        channels: int = 32,
        kernel_size: int = 3,
        num_adams: int = 3,
        num_imdbs: int = 4,
        upscale_factor: int = 2,
        variant: str = "full",
        aspp_dilations: Sequence[int] = (1, 2, 4),
        leaky_slope: float = 0.1,
        aspp_blocks_per_module: int = 2,
        fem_units: int = 2,
        imdb_width: int = None,
        imdb_narrow: int = None,
        imdb_stages: int = 3,
        global_residual: bool = True,
        initializer_seed: int = 0,
        **kwargs,
    ):
        self.angular_resolution = angular_resolution
        self.channels = channels
        self.kernel_size = kernel_size
        self.num_adams = num_adams
        self.num_imdbs = num_imdbs
        self.upscale_factor = upscale_factor
        self.variant = variant
        self.aspp_dilations = list(aspp_dilations)
        self.leaky_slope = leaky_slope
        self.aspp_blocks_per_module = aspp_blocks_per_module
        self.fem_units = fem_units
        self.imdb_width = 4 * channels if imdb_width is None else imdb_width
        self.imdb_narrow = channels if imdb_narrow is None else imdb_narrow
        self.imdb_stages = imdb_stages
        self.global_residual = global_residual
        self.initializer_seed = initializer_seed
        self._validate()
        super().__init__(**kwargs)

    def _validate(self) -> None:
        if self.angular_resolution < 1 or self.angular_resolution % 2 == 0:
            raise ConfigError(f"angular_resolution must be odd and positive, got {self.angular_resolution}")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ConfigError(f"kernel_size must be odd and positive, got {self.kernel_size}")
        if self.upscale_factor < 1:
            raise ConfigError(f"upscale_factor must be at least 1, got {self.upscale_factor}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant}")
        for name in ("channels", "imdb_stages"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("num_adams", "num_imdbs", "fem_units", "aspp_blocks_per_module"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must not be negative, got {getattr(self, name)}")
        if not 0 < self.imdb_narrow < self.imdb_width:
            raise ConfigError(
                f"imdb_narrow must lie strictly between 0 and imdb_width, got {self.imdb_narrow} / {self.imdb_width}"
            )

    @property
    def offset_channels(self) -> int:
        return 2 * self.kernel_size**2

    @property
    def num_views(self) -> int:
        return self.angular_resolution**2

    @property
    def center_view_index(self) -> int:
        """Raster index of the center view, ``(A * A - 1) / 2``."""
        return (self.num_views - 1) // 2

    @property
    def reconstruction_channels(self) -> int:
        return (self.num_adams + 1) * self.channels

    def block_config(self) -> BlockConfig:
        """The widths, dilations and slope every block of the network is built from."""
        return BlockConfig(
            channels=self.channels,
            aspp_dilations=tuple(self.aspp_dilations),
            leaky_slope=self.leaky_slope,
            aspp_blocks_per_module=self.aspp_blocks_per_module,
            imdb_width=self.imdb_width,
            imdb_narrow=self.imdb_narrow,
            imdb_stages=self.imdb_stages,
        )

    def design_decisions(self) -> Dict[str, Any]:
        """The structural choices that are not fixed by the architecture description, recorded in manifests."""
        return {
            "global_residual": "bicubic" if self.global_residual else "none",
            "view_order": "raster, center last in every concatenation",
            "distribute_offset_input_order": "fused sub-feature first, previous side feature second",
            "collect_center_feature": "center feature of the previous stage",
            "center_squeeze_shared_with_sides": True,
            "fusion_activation": "leaky_relu after the 1x1 fusion conv",
            "reconstruction_adapter": "1x1 conv (K+1)*C -> C",
            "fem_units": self.fem_units,
            "aspp_blocks_per_module": self.aspp_blocks_per_module,
            "imdb_stages": self.imdb_stages,
            "imdb_width": self.imdb_width,
            "imdb_narrow": self.imdb_narrow,
            "deform_padding": "zeros",
            "offset_layout": "tap-major interleaved (dy, dx)",
            "integer_coordinate_subgradient": "left cell",
        }
