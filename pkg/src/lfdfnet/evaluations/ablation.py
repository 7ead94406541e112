"""
Side-by-side comparison of architecture variants and of the number of alignment modules.

Every row is trained with the same seed, data and budget, then evaluated on the same scenes. A row that fails
to build or train is reported with its error and the harness moves on.
"""

import dataclasses
import json
import os
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import pandas as pd
from transformers.utils import logging

from lfdfnet.data_generators.lf_dataset import LightFieldPatchDataset
from lfdfnet.data_generators.light_field import LightField
from lfdfnet.evaluations.evaluation import ModelSuperResolver, evaluate
from lfdfnet.models.hf_models.config import LfDfnetConfig
from lfdfnet.models.model_complexity import estimate_flops
from lfdfnet.runners.runner_argument_dataclass import TrainConfig
from lfdfnet.trainers.lfdfnet_trainer import LfDfnetTrainer

LOG = logging.get_logger(__name__)

ABLATION_COLUMNS = ["name", "variant", "num_adams", "params", "flops", "psnr", "ssim", "error"]


@dataclasses.dataclass(frozen=True)
class AblationRow:
    name: str
    config_kwargs: Dict[str, Any]


def ablation_rows(
    base_kwargs: Mapping[str, Any],
    variants: Sequence[str],
    adam_counts: Sequence[int] = (),
    variant_overrides: Optional[Mapping[str, Mapping[str, Any]]] = None,
) -> List[AblationRow]:
    """One row per variant, then one full-model row per ADAM count."""
    variant_overrides = variant_overrides or {}
    rows = []
    for variant in variants:
        kwargs = {**base_kwargs, "variant": variant, **variant_overrides.get(variant, {})}
        rows.append(AblationRow(name=variant, config_kwargs=kwargs))
    for num_adams in adam_counts:
        kwargs = {**base_kwargs, "variant": "full", **variant_overrides.get("full", {}), "num_adams": num_adams}
        rows.append(AblationRow(name=f"full_K{num_adams}", config_kwargs=kwargs))
    return rows


def _run_row(
    row: AblationRow,
    train_config: TrainConfig,
    train_dataset: LightFieldPatchDataset,
    eval_scenes: Sequence[Tuple[str, LightField]],
    out_dir: Path,
) -> Dict[str, Any]:
    config = LfDfnetConfig(**row.config_kwargs)
    row_config = dataclasses.replace(train_config, output_dir=str(out_dir / row.name), resume_from_checkpoint=None)
    trainer = LfDfnetTrainer(config, row_config, train_dataset)
    trainer.fit()
    report = evaluate(ModelSuperResolver(trainer.model, name=row.name), eval_scenes, dataset_id="ablation")
    # FLOPs of one low-resolution training patch
    low_res = train_config.patch_size // config.upscale_factor
    angular = config.angular_resolution
    return {
        "params": trainer.model.num_parameters(),
        "flops": estimate_flops(config, (angular, angular, low_res, low_res)),
        "psnr": report.psnr,
        "ssim": report.ssim,
    }


def ablate(
    base_kwargs: Mapping[str, Any],
    train_config: TrainConfig,
    train_dataset: LightFieldPatchDataset,
    eval_scenes: Sequence[Tuple[str, LightField]],
    out_dir: Union[str, os.PathLike],
    variants: Sequence[str],
    adam_counts: Sequence[int] = (),
    variant_overrides: Optional[Mapping[str, Mapping[str, Any]]] = None,
) -> pd.DataFrame:
    out_dir = Path(out_dir)
    results: Dict[str, Dict[str, Any]] = {}
    records = []
    for row in ablation_rows(base_kwargs, variants, adam_counts, variant_overrides):
        record = {
            "name": row.name,
            "variant": row.config_kwargs.get("variant"),
            "num_adams": row.config_kwargs.get("num_adams"),
            "params": None,
            "flops": None,
            "psnr": None,
            "ssim": None,
            "error": None,
        }
        # Rows with the same configuration train identically, so they are run once
        key = json.dumps(row.config_kwargs, sort_keys=True, default=str)
        try:
            if key not in results:
                LOG.info("Ablation row %s: %s", row.name, row.config_kwargs)
                results[key] = _run_row(row, train_config, train_dataset, eval_scenes, out_dir)
            record.update(results[key])
        except Exception as e:  # noqa: BLE001
            LOG.error("Ablation row %s failed: %r", row.name, e)
            record["error"] = f"{type(e).__name__}: {e}"
        records.append(record)

    frame = pd.DataFrame.from_records(records, columns=ABLATION_COLUMNS)
    out_dir.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out_dir / "ablation.csv", index=False)
    return frame
