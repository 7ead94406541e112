import dataclasses
import json
from typing import List, Literal, Optional, Union, get_args, get_origin

from lfdfnet.data_generators.synthetic.renderer import DEFAULT_BASELINE_MULTIPLIERS
from lfdfnet.exceptions import ConfigError
from lfdfnet.models.hf_models.config import VARIANTS, LfDfnetConfig

COMMANDS = ("generate", "train", "eval", "sweep", "ablate", "plot")


def _require_positive(instance, *names: str) -> None:
    for name in names:
        value = getattr(instance, name)
        if value is None or value <= 0:
            raise ConfigError(f"{type(instance).__name__}.{name} must be positive, got {value}")


def _require_literal_choices(instance) -> None:
    """Rejects values of the Literal fields that are not among their choices."""
    for field in dataclasses.fields(instance):
        if get_origin(field.type) is not Literal:
            continue
        choices = get_args(field.type)
        value = getattr(instance, field.name)
        if value not in choices:
            raise ConfigError(f"{type(instance).__name__}.{field.name} must be one of {list(choices)}, got {value!r}")


@dataclasses.dataclass
class DataTrainingArguments:
    """Arguments pertaining to the light field datasets used for training and evaluation."""

    data_folder: Optional[str] = dataclasses.field(
        default=None,
        metadata={
            "help": "The training dataset root, one sub-directory per scene. "
            "Relative paths resolve against $LFDF_DATA_ROOT."
        },
    )
    test_data_folder: Optional[str] = dataclasses.field(
        default=None,
        metadata={"help": "The evaluation dataset root; defaults to data_folder when empty."},
    )


@dataclasses.dataclass
class ModelArguments:
    """Arguments pertaining to the network architecture, see LfDfnetConfig for their meaning."""

    angular_resolution: int = dataclasses.field(default=5, metadata={"help": "Angular size A (odd)."})
    channels: int = dataclasses.field(default=32, metadata={"help": "Feature depth C."})
    kernel_size: int = dataclasses.field(default=3, metadata={"help": "Deformable kernel size k."})
    num_adams: int = dataclasses.field(default=3, metadata={"help": "Number K of ADAMs."})
    num_imdbs: int = dataclasses.field(default=4, metadata={"help": "Number N of IMDBs."})
    upscale_factor: int = dataclasses.field(default=2, metadata={"help": "Upscale factor alpha."})
    variant: Literal[VARIANTS] = dataclasses.field(
        default="full",
        metadata={"help": "Architecture variant."},
    )
    aspp_dilations: List[int] = dataclasses.field(
        default_factory=lambda: [1, 2, 4], metadata={"help": "Dilation rates of the residual ASPP blocks."}
    )
    leaky_slope: float = dataclasses.field(default=0.1, metadata={"help": "LeakyReLU negative slope."})
    aspp_blocks_per_module: int = dataclasses.field(
        default=2, metadata={"help": "Residual ASPP blocks per residual ASPP module."}
    )
    fem_units: int = dataclasses.field(
        default=2, metadata={"help": "Residual ASPP module + residual block units of the feature extractor."}
    )
    imdb_width: Optional[int] = dataclasses.field(
        default=None, metadata={"help": "IMDB width after the head conv, 4 * channels when empty."}
    )
    imdb_narrow: Optional[int] = dataclasses.field(
        default=None, metadata={"help": "IMDB preserved narrow width, channels when empty."}
    )
    imdb_stages: int = dataclasses.field(default=3, metadata={"help": "IMDB distillation steps."})
    global_residual: bool = dataclasses.field(
        default=True, metadata={"help": "Add the bicubic upscaling of the input views to the output."}
    )

    def __post_init__(self):
        _require_literal_choices(self)

    def to_config(self, seed: int = 0, **overrides) -> LfDfnetConfig:
        kwargs = dataclasses.asdict(self)
        kwargs.update(overrides)
        return LfDfnetConfig(initializer_seed=seed, **kwargs)


@dataclasses.dataclass
class TrainConfig:
    """Arguments pertaining to the optimisation protocol."""

    batch_size: int = dataclasses.field(default=8, metadata={"help": "Patches per batch."})
    lr0: float = dataclasses.field(default=2e-4, metadata={"help": "Initial learning rate."})
    decay_factor: float = dataclasses.field(default=0.5, metadata={"help": "Learning rate decay factor."})
    decay_every: int = dataclasses.field(default=15, metadata={"help": "Epochs between two learning rate decays."})
    total_epochs: int = dataclasses.field(default=50, metadata={"help": "Number of training epochs."})
    patch_size: int = dataclasses.field(
        default=32,
        metadata={"help": "High-resolution patch edge; the network sees patch_size / alpha low-resolution pixels."},
    )
    stride: int = dataclasses.field(default=32, metadata={"help": "High-resolution patch stride."})
    seed: int = dataclasses.field(default=42, metadata={"help": "Seed of initialisation, shuffling and augmentation."})
    augment: bool = dataclasses.field(
        default=True, metadata={"help": "Draw one of the 8 joint flip / rotation symmetries per patch."}
    )
    num_workers: int = dataclasses.field(default=0, metadata={"help": "Data loader worker processes."})
    log_every: int = dataclasses.field(default=1, metadata={"help": "Steps between two train_log.jsonl records."})
    deterministic: bool = dataclasses.field(
        default=True, metadata={"help": "Force deterministic torch kernels for reproducible runs."}
    )
    max_steps: Optional[int] = dataclasses.field(
        default=None, metadata={"help": "Optional cap on the number of optimisation steps."}
    )
    output_dir: Optional[str] = dataclasses.field(
        default=None, metadata={"help": "The model folder receiving checkpoints and logs."}
    )
    resume_from_checkpoint: Optional[str] = dataclasses.field(
        default=None,
        metadata={"help": "A ckpt_epoch_{E}.bin to resume from, or 'latest' for the newest one in output_dir."},
    )
    adam_betas: List[float] = dataclasses.field(
        default_factory=lambda: [0.9, 0.999], metadata={"help": "Adam beta coefficients."}
    )
    adam_eps: float = dataclasses.field(default=1e-8, metadata={"help": "Adam epsilon."})

    def __post_init__(self):
        _require_positive(self, "batch_size", "lr0", "decay_factor", "decay_every", "patch_size", "stride")
        if self.total_epochs < 0:
            raise ConfigError(f"TrainConfig.total_epochs must not be negative, got {self.total_epochs}")
        if self.max_steps is not None and self.max_steps < 0:
            raise ConfigError(f"TrainConfig.max_steps must not be negative, got {self.max_steps}")
        if len(self.adam_betas) != 2:
            raise ConfigError(f"TrainConfig.adam_betas needs two values, got {self.adam_betas}")

    def check_alpha(self, alpha: int) -> None:
        if self.patch_size % alpha:
            raise ConfigError(f"patch_size {self.patch_size} is not divisible by the upscale factor {alpha}")


@dataclasses.dataclass
class GenerateArguments:
    """Arguments pertaining to the synthetic light field generator."""

    scene_path: Optional[str] = dataclasses.field(
        default=None, metadata={"help": "A scene description JSON rendered at every baseline multiplier."}
    )
    kd_list: List[float] = dataclasses.field(
        default_factory=lambda: list(DEFAULT_BASELINE_MULTIPLIERS), metadata={"help": "Baseline multipliers to render."}
    )
    num_random_scenes: int = dataclasses.field(
        default=0, metadata={"help": "Random layered scenes rendered in addition to scene_path."}
    )
    random_seed_offset: int = dataclasses.field(
        default=0, metadata={"help": "Seed of the first random scene; scene i uses random_seed_offset + i."}
    )
    random_angular_res: int = dataclasses.field(default=5, metadata={"help": "Angular size of the random scenes."})
    random_spatial_res: List[int] = dataclasses.field(
        default_factory=lambda: [64, 64], metadata={"help": "Spatial size of the random scenes."}
    )
    random_num_layers: int = dataclasses.field(default=3, metadata={"help": "Layers per random scene."})
    unit_disparity: float = dataclasses.field(
        default=1.0, metadata={"help": "Pixels of shift per unit baseline and unit inverse depth (random scenes)."}
    )

    def __post_init__(self):
        if any(k_d < 0 for k_d in self.kd_list):
            raise ConfigError(f"Baseline multipliers must not be negative, got {self.kd_list}")


@dataclasses.dataclass
class EvaluationArguments:
    """Arguments pertaining to the metric report."""

    resolver: Literal["model", "bicubic", "identity"] = dataclasses.field(
        default="model",
        metadata={"help": "What is evaluated."},
    )
    checkpoint: Optional[str] = dataclasses.field(
        default=None,
        metadata={
            "help": "A ckpt_epoch_{E}.bin, a model folder or a save_pretrained directory. "
            "A freshly initialised model is evaluated when empty."
        },
    )
    report_name: str = dataclasses.field(default="metric_report", metadata={"help": "Report file stem."})
    heatmaps: bool = dataclasses.field(default=True, metadata={"help": "Render per-view PSNR heatmaps."})

    def __post_init__(self):
        _require_literal_choices(self)


@dataclasses.dataclass
class SweepArguments:
    """Arguments pertaining to the disparity sweep."""

    scene_path: Optional[str] = dataclasses.field(default=None, metadata={"help": "The swept scene description."})
    kd_list: List[float] = dataclasses.field(
        default_factory=lambda: list(DEFAULT_BASELINE_MULTIPLIERS),
        metadata={"help": "Baseline multipliers of the sweep."},
    )
    checkpoints: List[str] = dataclasses.field(
        default_factory=list, metadata={"help": "Models compared as name=path entries."}
    )
    epi_row: Optional[int] = dataclasses.field(
        default=None, metadata={"help": "Spatial row of the EPI strips, the middle row when empty."}
    )


@dataclasses.dataclass
class AblationArguments:
    """Arguments pertaining to the variant comparison."""

    variants: List[str] = dataclasses.field(
        default_factory=lambda: list(VARIANTS), metadata={"help": "Variants trained and evaluated."}
    )
    adam_counts: List[int] = dataclasses.field(
        default_factory=lambda: [1, 2, 3, 4], metadata={"help": "ADAM counts K of the full-model sweep."}
    )
    variant_overrides: Optional[Union[dict, str]] = dataclasses.field(
        default=None,
        metadata={
            "help": "Per-variant model argument overrides (a dict or its JSON string), "
            "e.g. a wider no_adam to match model size."
        },
    )

    def __post_init__(self):
        if isinstance(self.variant_overrides, str):
            try:
                self.variant_overrides = json.loads(self.variant_overrides)
            except json.JSONDecodeError as e:
                raise ConfigError(f"variant_overrides is not valid JSON: {e}") from e
        self.variant_overrides = dict(self.variant_overrides or {})
        unknown = [variant for variant in list(self.variants) + list(self.variant_overrides) if variant not in VARIANTS]
        if unknown:
            raise ConfigError(f"Unknown variants {unknown}, expected a subset of {VARIANTS}")
        if any(k < 1 for k in self.adam_counts):
            raise ConfigError(f"ADAM counts must be positive, got {self.adam_counts}")


@dataclasses.dataclass
class PlotArguments:
    """Arguments pertaining to figure rendering."""

    report_path: Optional[str] = dataclasses.field(
        default=None, metadata={"help": "A metric report JSON or a sweep CSV to plot."}
    )
    image_format: Literal["png", "svg"] = dataclasses.field(
        default="png", metadata={"help": "Figure file format."}
    )

    def __post_init__(self):
        _require_literal_choices(self)


@dataclasses.dataclass
class RunConfig:
    command: Literal[COMMANDS] = dataclasses.field(metadata={"help": "The subcommand."})
    config_path: Optional[str] = dataclasses.field(default=None, metadata={"help": "JSON or YAML config file."})
    overrides: List[str] = dataclasses.field(
        default_factory=list, metadata={"help": "Dotted section.key=value overrides."}
    )
    seed: Optional[int] = dataclasses.field(default=None, metadata={"help": "Overrides training.seed."})
    output_dir: Optional[str] = dataclasses.field(default=None, metadata={"help": "Where every artifact goes."})

    def __post_init__(self):
        _require_literal_choices(self)
