import os
import re
from pathlib import Path
from typing import Dict, Optional, Union

EPOCH_CHECKPOINT_PATTERN = re.compile(r"ckpt_epoch_(\d+)\.bin$")
CHECKPOINT_TEMPLATE = "ckpt_epoch_{epoch}"
MODEL_MANIFEST_FILE = "model_manifest.json"
EFFECTIVE_CONFIG_FILE = "effective_config.json"
TRAINING_LOG_FILE = "train_log.jsonl"


def checkpoint_blob_path(model_folder: Union[str, Path], epoch: int) -> Path:
    return Path(model_folder) / (CHECKPOINT_TEMPLATE.format(epoch=epoch) + ".bin")


def checkpoint_manifest_path(checkpoint_path: Union[str, Path]) -> Path:
    checkpoint_path = Path(checkpoint_path)
    return checkpoint_path.with_suffix(".json")


def get_checkpoint_epoch(checkpoint_path) -> int:
    match = EPOCH_CHECKPOINT_PATTERN.search(str(checkpoint_path))
    if match:
        return int(match.group(1))

    raise RuntimeError(
        f"The model checkpoint at {checkpoint_path} does not match the pattern below:\n"
        f"{EPOCH_CHECKPOINT_PATTERN.pattern}\n"
    )


def find_latest_epoch_checkpoint_path(checkpoint_dir) -> Optional[Dict]:
    if not os.path.isdir(checkpoint_dir):
        return None
    # Filter files that match the checkpoint pattern and extract epoch numbers
    checkpoints = []
    for filename in os.listdir(checkpoint_dir):
        match = EPOCH_CHECKPOINT_PATTERN.search(filename)
        if match:
            checkpoints.append((int(match.group(1)), filename))

    # Sort the checkpoints by epoch in descending order (to get the latest one first)
    checkpoints.sort(reverse=True, key=lambda x: x[0])
    if checkpoints:
        return {"epoch": checkpoints[0][0], "checkpoint_path": os.path.join(checkpoint_dir, checkpoints[0][1])}
    return None


def find_latest_checkpoint_path(checkpoint_dir) -> str:
    latest = find_latest_epoch_checkpoint_path(checkpoint_dir)
    if latest:
        return latest["checkpoint_path"]

    raise RuntimeError(
        f"Could not discover any model checkpoint in {checkpoint_dir} matching pattern\n"
        f"{EPOCH_CHECKPOINT_PATTERN.pattern}\n"
    )
