import dataclasses
import json
import math
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import torch
from torch.utils.data import DataLoader
from tqdm import tqdm
from transformers.utils import logging

from lfdfnet.data_generators.lf_dataset import LightFieldPatchCollator, LightFieldPatchDataset
from lfdfnet.exceptions import ConfigError, NonFiniteLossError
from lfdfnet.models.hf_models.config import LfDfnetConfig
from lfdfnet.models.hf_models.hf_lfdfnet import LfDfnetModel, write_model_manifest
from lfdfnet.models.loss_schedulers import StepDecayLRSchedule
from lfdfnet.runners.runner_argument_dataclass import TrainConfig
from lfdfnet.utils.checkpoint_utils import (
    MODEL_MANIFEST_FILE,
    TRAINING_LOG_FILE,
    checkpoint_blob_path,
    checkpoint_manifest_path,
    find_latest_epoch_checkpoint_path,
    get_checkpoint_epoch,
)
from lfdfnet.utils.model_utils import create_folder_if_not_exist, enable_determinism, read_json, write_json

TRAIN_CONFIG_FILE = "train_config.json"


def init_weights(model: LfDfnetModel, seed: int) -> LfDfnetModel:
    """
    Re-initialises every conv with Kaiming and zeroes the last conv of every offset branch.

    The global torch RNG is left untouched, so two calls with the same seed give bit-identical weights.
    """
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        model.apply(model._init_weights)
    return model


def l1_loss(prediction: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    if prediction.shape != target.shape:
        raise ValueError(f"Prediction {tuple(prediction.shape)} and target {tuple(target.shape)} differ in shape")
    return torch.mean(torch.abs(prediction - target))


def lr_at(epoch: int, train_config: Optional[TrainConfig] = None) -> float:
    train_config = train_config or TrainConfig()
    return _schedule_for(train_config).get_lr_for_epoch(epoch)


def _schedule_for(train_config: TrainConfig) -> StepDecayLRSchedule:
    return StepDecayLRSchedule(
        lr0=train_config.lr0,
        decay_factor=train_config.decay_factor,
        decay_every=train_config.decay_every,
        total_epochs=max(train_config.total_epochs, 1),
    )


@dataclasses.dataclass
class Checkpoint:
    path: Path
    epoch: int
    global_step: int
    history: List[Dict[str, float]]
    partial_epoch_steps: int = 0


class LfDfnetTrainer:
    """
    Trains the light field super-resolution network with the L1 loss, Adam and a step-decayed learning rate.

    Every epoch is one pass over the un-augmented patches in an order drawn from ``(seed, epoch)``; the collator
    applies one of the 8 joint flip / rotation symmetries per patch. A checkpoint ``ckpt_epoch_{E}.bin`` with a
    ``.json`` manifest is written after every epoch, ``E`` counting completed epochs, so a resumed run repeats
    the remaining epochs exactly. A run cut short by ``max_steps`` saves under the unfinished epoch with
    ``partial_epoch_steps`` set; resuming it trains that epoch again from its start.
    """

    def __init__(
        self,
        model_config: LfDfnetConfig,
        train_config: TrainConfig,
        train_dataset: LightFieldPatchDataset,
        model_folder: Optional[Union[str, os.PathLike]] = None,
        device: Optional[Union[str, torch.device]] = None,
    ):
        model_folder = model_folder or train_config.output_dir
        if not model_folder:
            raise ConfigError("The trainer needs a model folder, set training.output_dir")
        train_config.check_alpha(model_config.upscale_factor)

        self._model_config = model_config
        self._train_config = train_config
        self._train_dataset = train_dataset
        self._model_folder = create_folder_if_not_exist(model_folder)
        self._device = torch.device(device) if device else torch.device("cpu")
        self._schedule = _schedule_for(train_config)

        if train_config.deterministic:
            enable_determinism(train_config.seed)

        model_config.initializer_seed = train_config.seed
        self._model = LfDfnetModel(model_config).to(self._device)
        self._optimizer = torch.optim.Adam(
            self._model.parameters(),
            lr=train_config.lr0,
            betas=tuple(train_config.adam_betas),
            eps=train_config.adam_eps,
        )
        self._collator = LightFieldPatchCollator(seed=train_config.seed, augment=train_config.augment)
        self._current_epoch = 0
        self._global_step = 0
        self._history: List[Dict[str, float]] = []
        self._partial_epoch_steps = 0

        self.get_logger().info(
            f"model_folder: {self._model_folder}\n"
            f"variant: {model_config.variant}\n"
            f"upscale_factor: {model_config.upscale_factor}\n"
            f"num_parameters: {self._model.num_parameters()}\n"
            f"num_patches: {len(train_dataset)}\n"
            f"batch_size: {train_config.batch_size}\n"
            f"lr0: {train_config.lr0}\n"
            f"decay_factor: {train_config.decay_factor}\n"
            f"decay_every: {train_config.decay_every}\n"
            f"total_epochs: {train_config.total_epochs}\n"
            f"patch_size: {train_config.patch_size}\n"
            f"stride: {train_config.stride}\n"
            f"seed: {train_config.seed}\n"
            f"augment: {train_config.augment}\n"
            f"max_steps: {train_config.max_steps}\n"
            f"resume_from_checkpoint: {train_config.resume_from_checkpoint}\n"
        )

        self.get_logger().info("Saving the model configuration")
        self.save_model_config()

        if train_config.resume_from_checkpoint:
            self.restore_from_checkpoint(train_config.resume_from_checkpoint)

    @classmethod
    def get_logger(cls):
        return logging.get_logger(cls.__name__)

    @property
    def model(self) -> LfDfnetModel:
        return self._model

    @property
    def optimizer(self) -> torch.optim.Optimizer:
        return self._optimizer

    @property
    def history(self) -> List[Dict[str, float]]:
        return list(self._history)

    @property
    def current_epoch(self) -> int:
        return self._current_epoch

    def get_model_folder(self) -> Path:
        return self._model_folder

    def save_model_config(self) -> None:
        self._model.config.to_json_file(str(self._model_folder / "config.json"))
        write_json(dataclasses.asdict(self._train_config), self._model_folder / TRAIN_CONFIG_FILE)
        write_model_manifest(self._model, self._model_folder / MODEL_MANIFEST_FILE, seed=self._train_config.seed)

    def set_learning_rate(self, lr: float) -> None:
        for param_group in self._optimizer.param_groups:
            param_group["lr"] = lr

    def train_step(self, batch: Dict[str, torch.Tensor], epoch: int = 0) -> float:
        """One Adam update on the L1 loss of a ``{"lr_views", "labels"}`` batch; returns the loss."""
        self._model.train()
        lr_views = batch["lr_views"].to(self._device)
        labels = batch["labels"].to(self._device)
        alpha = self._model_config.upscale_factor
        if tuple(labels.shape[-2:]) != (alpha * lr_views.shape[-2], alpha * lr_views.shape[-1]):
            raise ValueError(
                f"Labels {tuple(labels.shape)} are not the {alpha}x upscaling of the inputs {tuple(lr_views.shape)}"
            )

        output = self._model(lr_views=lr_views)
        loss = l1_loss(output.sr_views, labels.to(output.sr_views.dtype))
        if not torch.isfinite(loss):
            raise NonFiniteLossError(
                f"Non-finite loss {loss.item()} at epoch {epoch}, step {self._global_step}, "
                f"lr {self._optimizer.param_groups[0]['lr']}"
            )
        self._optimizer.zero_grad(set_to_none=True)
        loss.backward()
        self._optimizer.step()
        self._global_step += 1
        return loss.item()

    def epoch_order(self, epoch: int) -> List[int]:
        """The patch order of an epoch, a pure function of ``(seed, epoch)``."""
        rng = np.random.default_rng((self._train_config.seed, epoch))
        return [int(i) for i in rng.permutation(len(self._train_dataset))]

    def _create_data_loader(self, epoch: int) -> DataLoader:
        self._collator.set_epoch(epoch)
        return DataLoader(
            self._train_dataset,
            batch_size=self._train_config.batch_size,
            sampler=self.epoch_order(epoch),
            collate_fn=self._collator,
            num_workers=self._train_config.num_workers,
            drop_last=False,
        )

    def _reached_max_steps(self) -> bool:
        max_steps = self._train_config.max_steps
        return max_steps is not None and self._global_step >= max_steps

    def fit(self) -> Checkpoint:
        """
        Trains until ``total_epochs`` (or ``max_steps``) and returns the last checkpoint.

        A fresh run first writes ``ckpt_epoch_0``, so a zero-epoch run still leaves a loadable checkpoint.
        """
        latest = self.save_checkpoint() if self._current_epoch == 0 and self._global_step == 0 else None
        self._truncate_training_log()

        total_epochs = self._train_config.total_epochs
        for epoch in tqdm(range(self._current_epoch, total_epochs), desc="Epochs"):
            if self._reached_max_steps():
                break
            lr = self._schedule(epoch)
            self.set_learning_rate(lr)
            self._partial_epoch_steps = 0
            data_loader = self._create_data_loader(epoch)
            losses = []
            for batch in data_loader:
                loss = self.train_step(batch, epoch)
                losses.append(loss)
                if (self._global_step - 1) % self._train_config.log_every == 0:
                    self._append_training_log({"step": self._global_step, "epoch": epoch, "lr": lr, "loss": loss})
                if self._reached_max_steps():
                    break

            mean_loss = float(np.mean(losses)) if losses else math.nan
            record = {"epoch": epoch, "lr": lr, "loss": mean_loss, "steps": len(losses)}
            if len(losses) < len(data_loader):
                record["partial"] = True
                self._partial_epoch_steps = len(losses)
                self.get_logger().info(
                    "Epoch %d stopped by max_steps after %d of %d steps, mean L1 loss=%.6f",
                    epoch,
                    len(losses),
                    len(data_loader),
                    mean_loss,
                )
            else:
                self._current_epoch = epoch + 1
                self.get_logger().info("Epoch %d: lr=%g, mean L1 loss=%.6f", epoch, lr, mean_loss)
            self._history.append(record)
            latest = self.save_checkpoint()

        if latest is None:
            latest = self.save_checkpoint()
        return latest

    def _append_training_log(self, record: Dict[str, Any]) -> None:
        with open(self._model_folder / TRAINING_LOG_FILE, "a") as f:
            f.write(json.dumps(record) + "\n")

    def _truncate_training_log(self) -> None:
        """Drops the records of epochs that are about to be trained again."""
        log_path = self._model_folder / TRAINING_LOG_FILE
        if not log_path.exists():
            return
        with open(log_path, "r") as f:
            records = [json.loads(line) for line in f if line.strip()]
        kept = [record for record in records if record["epoch"] < self._current_epoch]
        with open(log_path, "w") as f:
            for record in kept:
                f.write(json.dumps(record) + "\n")

    def save_checkpoint(self) -> Checkpoint:
        checkpoint_path = checkpoint_blob_path(self._model_folder, self._current_epoch)
        torch.save(
            {
                "model": self._model.state_dict(),
                "optimizer": self._optimizer.state_dict(),
                "epoch": self._current_epoch,
                "global_step": self._global_step,
                "partial_epoch_steps": self._partial_epoch_steps,
                "history": self._history,
            },
            checkpoint_path,
        )
        write_json(
            {
                "epoch": self._current_epoch,
                "global_step": self._global_step,
                "partial_epoch_steps": self._partial_epoch_steps,
                "train_config": dataclasses.asdict(self._train_config),
                "network_config": self._model.config.to_dict(),
                "design_decisions": self._model.config.design_decisions(),
                "history": self._history,
                "num_parameters": self._model.num_parameters(),
                "creation_seed": self._train_config.seed,
            },
            checkpoint_manifest_path(checkpoint_path),
        )
        self.get_logger().info("Saved checkpoint %s", checkpoint_path)
        return Checkpoint(
            path=checkpoint_path,
            epoch=self._current_epoch,
            global_step=self._global_step,
            history=self.history,
            partial_epoch_steps=self._partial_epoch_steps,
        )

    def restore_from_checkpoint(self, checkpoint: Union[str, os.PathLike]) -> int:
        """Restores model, optimizer and progress; ``"latest"`` picks the newest checkpoint of the model folder."""
        if str(checkpoint) == "latest":
            latest = find_latest_epoch_checkpoint_path(self._model_folder)
            if latest is None:
                raise FileNotFoundError(f"No checkpoint to resume from in {self._model_folder}")
            checkpoint = latest["checkpoint_path"]
        checkpoint = Path(checkpoint)
        if not checkpoint.exists():
            raise FileNotFoundError(f"Checkpoint {checkpoint} does not exist")

        state = torch.load(checkpoint, map_location=self._device, weights_only=False)
        self._model.load_state_dict(state["model"])
        self._optimizer.load_state_dict(state["optimizer"])
        self._current_epoch = int(state.get("epoch", get_checkpoint_epoch(checkpoint)))
        self._global_step = int(state["global_step"])
        self._partial_epoch_steps = int(state.get("partial_epoch_steps", 0))
        # A partial epoch is trained again, so its record is dropped
        self._history = [record for record in state.get("history", []) if record["epoch"] < self._current_epoch]
        self.get_logger().info(
            "Resumed from %s at epoch %d, step %d", checkpoint, self._current_epoch, self._global_step
        )
        return self._current_epoch

    @staticmethod
    def load_checkpoint(checkpoint_path: Union[str, os.PathLike], device: Optional[str] = None) -> LfDfnetModel:
        """Rebuilds the model of a ``ckpt_epoch_{E}.bin`` from its manifest and loads its parameters."""
        checkpoint_path = Path(checkpoint_path)
        manifest_path = checkpoint_manifest_path(checkpoint_path)
        if not checkpoint_path.exists() or not manifest_path.exists():
            raise FileNotFoundError(f"{checkpoint_path} or its manifest {manifest_path.name} does not exist")
        config = LfDfnetConfig.from_dict(read_json(manifest_path)["network_config"])
        model = LfDfnetModel(config)
        state = torch.load(checkpoint_path, map_location=device or "cpu", weights_only=False)
        model.load_state_dict(state["model"])
        model.eval()
        return model

    def __str__(self):
        return str(self.__class__.__name__)
