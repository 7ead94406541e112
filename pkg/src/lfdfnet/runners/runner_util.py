import dataclasses
import json
import os
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import yaml
from transformers import HfArgumentParser
from transformers.utils import logging

from lfdfnet.exceptions import ConfigError
from lfdfnet.models.hf_models.hf_lfdfnet import LfDfnetModel
from lfdfnet.runners.runner_argument_dataclass import (
    AblationArguments,
    DataTrainingArguments,
    EvaluationArguments,
    GenerateArguments,
    ModelArguments,
    PlotArguments,
    SweepArguments,
    TrainConfig,
)
from lfdfnet.trainers.lfdfnet_trainer import LfDfnetTrainer
from lfdfnet.utils.checkpoint_utils import find_latest_checkpoint_path

LOG = logging.get_logger(__name__)

SECTION_CLASSES = {
    "data": DataTrainingArguments,
    "model": ModelArguments,
    "training": TrainConfig,
    "generate": GenerateArguments,
    "eval": EvaluationArguments,
    "sweep": SweepArguments,
    "ablate": AblationArguments,
    "plot": PlotArguments,
}
# Provenance written next to the sections in effective_config.json, ignored when loading
RUN_SECTION = "run"

COMMAND_SECTIONS = {
    "generate": ("generate",),
    "train": ("data", "model", "training"),
    "eval": ("data", "model", "eval"),
    "sweep": ("model", "sweep"),
    "ablate": ("data", "model", "training", "ablate"),
    "plot": ("plot",),
}


def load_config_file(config_path: Union[str, os.PathLike]) -> Dict[str, Dict[str, Any]]:
    """
    Reads a JSON or YAML configuration nested by section.

    Example:
        {"model": {"channels": 8, "num_adams": 1}, "training": {"total_epochs": 2}}
    """
    config_path = Path(os.path.expanduser(str(config_path)))
    if not config_path.exists():
        raise FileNotFoundError(f"Config file {config_path} does not exist")
    text = config_path.read_text()
    try:
        if config_path.suffix in (".yaml", ".yml"):
            config = yaml.safe_load(text) or {}
        else:
            config = json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"Could not parse {config_path}: {e}") from e
    if not isinstance(config, dict):
        raise ConfigError(f"{config_path} must hold a mapping of sections, got {type(config).__name__}")
    config.pop(RUN_SECTION, None)
    _check_sections(config)
    return config


def _check_sections(config: Dict[str, Any]) -> None:
    unknown = sorted(set(config) - set(SECTION_CLASSES))
    if unknown:
        raise ConfigError(f"Unknown config sections {unknown}, expected a subset of {sorted(SECTION_CLASSES)}")
    for section, values in config.items():
        if not isinstance(values, dict):
            raise ConfigError(f"Config section {section} must be a mapping, got {type(values).__name__}")


def apply_overrides(config: Dict[str, Dict[str, Any]], overrides: Iterable[str]) -> Dict[str, Dict[str, Any]]:
    """
    Applies ``section.key=value`` overrides; values are parsed as YAML so ``2``, ``true`` or ``[1, 2]`` type
    themselves.
    """
    config = {section: dict(values) for section, values in config.items()}
    for override in overrides:
        if "=" not in override:
            raise ConfigError(f"Override {override!r} is not of the form section.key=value")
        dotted_key, raw_value = override.split("=", 1)
        if "." not in dotted_key:
            raise ConfigError(f"Override key {dotted_key!r} is not of the form section.key")
        section, key = dotted_key.split(".", 1)
        if section not in SECTION_CLASSES:
            raise ConfigError(f"Unknown config section {section!r} in override {override!r}")
        try:
            value = yaml.safe_load(raw_value)
        except yaml.YAMLError as e:
            raise ConfigError(f"Could not parse the value of override {override!r}: {e}") from e
        config.setdefault(section, {})[key] = value
    return config


def parse_section(section: str, values: Optional[Dict[str, Any]] = None):
    """Builds the argument dataclass of a section; unknown keys are rejected."""
    parser = HfArgumentParser(SECTION_CLASSES[section])
    try:
        (arguments,) = parser.parse_dict(values or {}, allow_extra_keys=False)
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid {section} section: {e}") from e
    return arguments


def parse_sections(config: Dict[str, Dict[str, Any]], sections: Sequence[str]) -> Dict[str, Any]:
    _check_sections(config)
    # Sections not used by the command are still validated
    parsed = {section: parse_section(section, values) for section, values in config.items()}
    for section in sections:
        if section not in parsed:
            parsed[section] = parse_section(section)
    return parsed


def effective_config(parsed: Dict[str, Any], run: Dict[str, Any]) -> Dict[str, Any]:
    payload = {section: dataclasses.asdict(arguments) for section, arguments in parsed.items()}
    payload[RUN_SECTION] = run
    return payload


def parse_kd_list(value: str) -> List[float]:
    """``"0..4"`` is the inclusive integer range, ``"0,0.5,1"`` a list."""
    value = value.strip()
    try:
        if ".." in value:
            start, stop = value.split("..", 1)
            start, stop = int(start), int(stop)
            if stop < start:
                raise ConfigError(f"Empty baseline multiplier range {value!r}")
            return [float(k) for k in range(start, stop + 1)]
        return [float(k) for k in value.split(",") if k.strip()]
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(f"Could not parse the baseline multipliers {value!r}: {e}") from e


def load_model(path: Union[str, os.PathLike]) -> LfDfnetModel:
    """Loads a ``ckpt_epoch_{E}.bin``, the newest checkpoint of a model folder or a ``save_pretrained`` directory."""
    path = Path(os.path.expanduser(str(path)))
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint {path} does not exist")
    if path.is_dir():
        has_weights = any(path.glob("*.safetensors")) or any(path.glob("pytorch_model*.bin"))
        if (path / "config.json").exists() and has_weights:
            LOG.info("Loading the pretrained model from %s", path)
            return LfDfnetModel.from_pretrained(str(path)).eval()
        try:
            path = Path(find_latest_checkpoint_path(str(path)))
        except RuntimeError as e:
            raise FileNotFoundError(str(e)) from e
    LOG.info("Loading the checkpoint %s", path)
    return LfDfnetTrainer.load_checkpoint(path)
