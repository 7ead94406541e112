import datetime
import functools
import hashlib
import inspect
import json
import os
from pathlib import Path
from typing import Any, Dict

import numpy as np
import torch
from transformers import set_seed
from transformers.utils import logging

LOG = logging.get_logger(__name__)


def create_folder_if_not_exist(folder: str, sub_folder_name: str = "") -> Path:
    """
    Creates a subfolder if it does not exist and returns the full Path object.

    Args:
        folder (str): The parent folder where the subfolder will be created.
        sub_folder_name (str): The name of the subfolder to be created, empty for the folder itself.

    Returns:
        Path: The full path to the created or existing subfolder.
    """
    sub_folder = Path(folder) / sub_folder_name if sub_folder_name else Path(folder)
    if not sub_folder.exists():
        LOG.info("Create folder: %s", sub_folder)
        sub_folder.mkdir(parents=True, exist_ok=True)
    return sub_folder


def log_function_decorator(function):
    @functools.wraps(function)
    def wrapper(*args, **kwargs):
        function_name = function.__name__
        module_name = inspect.getmodule(function).__name__
        beginning = datetime.datetime.now()
        logging.get_logger(module_name).info("Started running %s: %s", module_name, function_name)
        output = function(*args, **kwargs)
        ending = datetime.datetime.now()
        logging.get_logger(module_name).info("Took %s to run %s: %s.", ending - beginning, module_name, function_name)
        return output

    return wrapper


def enable_determinism(seed: int) -> None:
    """
    Seeds python, numpy and torch and switches torch to deterministic kernels.

    Two runs with the same seed and configuration on the same machine then produce bit-identical
    loss curves and model outputs.
    """
    set_seed(seed)
    torch.use_deterministic_algorithms(True)
    # Required by cuBLAS when deterministic algorithms are enforced on GPU
    os.environ.setdefault("CUBLAS_WORKSPACE_CONFIG", ":4096:8")


def md5(to_hash: str, encoding: str = "utf-8") -> str:
    """
    Computes the MD5 hash of a given string.

    Example:
        >>> md5("hello")
        '5d41402abc4b2a76b9719d911017c592'
    """
    return hashlib.md5(to_hash.encode(encoding), usedforsecurity=False).hexdigest()


def write_json(payload: Dict[str, Any], path: os.PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True, default=_json_default)
    return path


def read_json(path: os.PathLike) -> Dict[str, Any]:
    with open(path, "r") as f:
        return json.load(f)


def _json_default(value: Any):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "value"):
        # Enum members
        return value.value
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")
