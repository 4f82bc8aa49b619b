"""
Pydantic schemas for training runs and experiment presets.
"""

from __future__ import annotations

from pathlib import Path
from pydantic import BaseModel, Field, ValidationError

from src.core.errors import ConfigError
from src.schemas.data import DegradationConfig
from src.schemas.model import EncoderConfig, HeadConfig, ModelConfig, NonLocalConfig


class TrainConfig(BaseModel):
    """Optimisation schedule for one training run."""

    epochs: int = Field(default=1000, ge=0)
    iters_per_epoch: int = Field(default=1000, ge=1)
    batch_size: int = Field(default=16, ge=1)
    lr0: float = Field(default=1e-4, gt=0)
    lr_decay_factor: float = Field(default=0.5, gt=0)
    lr_decay_every: int = Field(default=200, ge=1)
    grad_clip: float = Field(default=5.0, ge=0)
    seed: int = 0
    max_images: int = Field(default=0, ge=0)

    def lr_at(self, epoch: int) -> float:
        """Step decay, a pure function of the epoch index."""
        return self.lr0 * self.lr_decay_factor ** (epoch // self.lr_decay_every)

    @property
    def total_steps(self) -> int:
        return self.epochs * self.iters_per_epoch


class ExperimentConfig(BaseModel):
    """Everything a training run needs besides the dataset."""

    model: ModelConfig = Field(default_factory=ModelConfig)
    degradation: DegradationConfig = Field(default_factory=DegradationConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return self.model_copy(update={"train": self.train.model_copy(update={"seed": seed})})


def _reference() -> ExperimentConfig:
    return ExperimentConfig()


def _desk() -> ExperimentConfig:
    return ExperimentConfig(
        model=ModelConfig(
            encoder=EncoderConfig(n_resblocks=4, n_feats=32),
            head=HeadConfig(
                query_hidden=[128, 128, 128, 128],
                kv_hidden=[128, 128],
                value_dim=128,
                weight_hidden=[128, 128],
                baseline_hidden=[128, 128, 128, 128],
            ),
            nonlocal_attention=NonLocalConfig(channels=32),
        ),
        degradation=DegradationConfig(patch_lr=32),
        train=TrainConfig(
            epochs=10, iters_per_epoch=300, batch_size=4, max_images=8
        ),
    )


def _tiny() -> ExperimentConfig:
    return ExperimentConfig(
        model=ModelConfig(
            encoder=EncoderConfig(n_resblocks=1, n_feats=4),
            head=HeadConfig(
                query_hidden=[16, 16],
                kv_hidden=[16],
                value_dim=16,
                weight_hidden=[16],
                baseline_hidden=[16, 16],
            ),
            nonlocal_attention=NonLocalConfig(channels=4, scale_set=[2, 4]),
        ),
        degradation=DegradationConfig(patch_lr=8, scale_max=2.0),
        train=TrainConfig(epochs=1, iters_per_epoch=3, batch_size=2, lr0=1e-3, max_images=4),
    )


PRESETS = {"reference": _reference, "desk": _desk, "tiny": _tiny}


def load_experiment_config(value: str) -> ExperimentConfig:
    """Resolve a preset name or a JSON file path."""
    if value in PRESETS:
        return PRESETS[value]()
    path = Path(value)
    if not path.is_file():
        raise ConfigError(f"'{value}' is neither a preset ({', '.join(PRESETS)}) nor a config file")
    try:
        return ExperimentConfig.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as exc:
        raise ConfigError(f"invalid config file {value}: {exc}") from exc

