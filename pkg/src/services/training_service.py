"""
End-to-end training: L1 loss on sampled query pixels, Adam with step-decayed
learning rate, global-norm clipping, a checkpoint every epoch and a CSV loss log.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from src.core.errors import TrainingError
from src.core.logging import get_logger
from src.engine import functional as F
from src.engine.optim import Adam, clip_grad_norm
from src.engine.tensor import Tensor, get_tape
from src.models.network import SuperResolutionModel
from src.schemas.checkpoint import SamplerState
from src.schemas.evaluation import LossLogRow
from src.schemas.training import ExperimentConfig
from src.services.checkpoint_service import Checkpoint, checkpoint_from_model, write_checkpoint
from src.services.data_pipeline import Batch, Dataset, PairedBatchLoader, open_dataset

logger = get_logger(__name__)

PROGRESS_EVERY = 50


@dataclass
class TrainingResult:
    checkpoint: Checkpoint
    losses: List[LossLogRow] = field(default_factory=list)
    checkpoint_path: Optional[Path] = None
    loss_log_path: Optional[Path] = None

    @property
    def final_loss(self) -> float:
        return self.losses[-1].loss if self.losses else math.nan


def loss_log_path_for(checkpoint_path: Union[str, Path]) -> Path:
    path = Path(checkpoint_path)
    return path.with_name(path.stem + ".loss.csv")


class Trainer:
    """Single-stream optimiser loop over a seeded batch loader."""

    def __init__(
        self,
        cfg: ExperimentConfig,
        dataset: Dataset,
        checkpoint_path: Optional[Union[str, Path]] = None,
        loss_log_path: Optional[Union[str, Path]] = None,
    ):
        self.cfg = cfg
        self.train_cfg = cfg.train
        self.model = SuperResolutionModel(cfg.model, seed=cfg.train.seed)
        self.optimizer = Adam(self.model.parameters(), lr=cfg.train.lr0)
        self.loader = PairedBatchLoader(dataset, cfg.degradation, cfg.train.batch_size, cfg.train.seed)
        self.checkpoint_path = Path(checkpoint_path) if checkpoint_path else None
        if loss_log_path is None and self.checkpoint_path is not None:
            loss_log_path = loss_log_path_for(self.checkpoint_path)
        self.loss_log_path = Path(loss_log_path) if loss_log_path else None
        self.losses: List[LossLogRow] = []

    def train_step(self, batch: Batch, step: int, lr: float) -> float:
        dtype = self.model.dtype
        pred = self.model.query(Tensor(batch.lr, dtype=dtype), batch.coords, batch.scale)
        if not np.isfinite(pred.data).all():
            get_tape().clear()
            raise TrainingError("non-finite predictions", step=step)
        loss = F.l1_loss(pred, Tensor(batch.gt, dtype=dtype))
        value = loss.item()
        if not math.isfinite(value):
            get_tape().clear()
            raise TrainingError(f"non-finite training loss {value}", step=step)
        self.model.zero_grad()
        loss.backward()
        clip_grad_norm(self.optimizer.params, self.train_cfg.grad_clip)
        self.optimizer.step(lr)
        return value

    def _snapshot(self, step: int) -> Checkpoint:
        checkpoint = checkpoint_from_model(
            self.model, step, SamplerState(seed=self.train_cfg.seed, step=step)
        )
        if self.checkpoint_path is not None:
            write_checkpoint(self.checkpoint_path, checkpoint)
        return checkpoint

    def _write_loss_log(self) -> None:
        if self.loss_log_path is None:
            return
        self.loss_log_path.parent.mkdir(parents=True, exist_ok=True)
        with self.loss_log_path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(LossLogRow.columns())
            writer.writerows(row.values() for row in self.losses)

    def run(self) -> TrainingResult:
        tc = self.train_cfg
        logger.info(
            "Training started",
            epochs=tc.epochs,
            iters_per_epoch=tc.iters_per_epoch,
            batch_size=tc.batch_size,
            parameters=self.model.num_parameters(),
            variant=self.model.variant.value,
            seed=tc.seed,
        )
        step = 0
        checkpoint = None
        for epoch in range(tc.epochs):
            lr = tc.lr_at(epoch)
            epoch_losses = []
            start = epoch * tc.iters_per_epoch
            for batch in self.loader.iterate(start, start + tc.iters_per_epoch):
                value = self.train_step(batch, step, lr)
                self.losses.append(LossLogRow(step=step, lr=lr, loss=value))
                epoch_losses.append(value)
                if step % PROGRESS_EVERY == 0:
                    logger.debug("Training progress", epoch=epoch, step=step, lr=lr, loss=value)
                step += 1
            checkpoint = self._snapshot(step)
            self._write_loss_log()
            logger.info("Epoch finished", epoch=epoch, step=step, lr=lr, mean_loss=float(np.mean(epoch_losses)))

        if checkpoint is None:
            checkpoint = self._snapshot(step)
            self._write_loss_log()
        logger.info("Training finished", steps=step, final_loss=self.losses[-1].loss if self.losses else None)
        return TrainingResult(
            checkpoint=checkpoint,
            losses=list(self.losses),
            checkpoint_path=self.checkpoint_path,
            loss_log_path=self.loss_log_path,
        )


def train(
    dataset_source: str,
    cfg: ExperimentConfig,
    checkpoint_path: Optional[Union[str, Path]] = None,
    loss_log_path: Optional[Union[str, Path]] = None,
) -> TrainingResult:
    """Open the dataset (directory or `synthetic:N`) and run a full training job."""
    min_side = int(math.ceil(cfg.degradation.patch_lr * cfg.degradation.scale_max))
    dataset = open_dataset(dataset_source, cfg.train.max_images, min_size=min_side)
    return Trainer(cfg, dataset, checkpoint_path, loss_log_path).run()
