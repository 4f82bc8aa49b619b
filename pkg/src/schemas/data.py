"""
Pydantic schemas for paired-data synthesis.
"""

from __future__ import annotations

from typing import List, Optional

from pydantic import BaseModel, Field, model_validator


class DegradationConfig(BaseModel):
    """How GT patches are cropped and degraded into LR inputs."""

    scale_min: float = Field(default=1.0, ge=1.0)
    scale_max: float = Field(default=4.0, ge=1.0)
    scale_choices: Optional[List[float]] = None
    patch_lr: int = Field(default=48, ge=8)
    bicubic_a: float = -0.75
    antialias: bool = True
    augment: bool = False
    max_redraws: int = Field(default=10, ge=1)

    @model_validator(mode="after")
    def check_range(self) -> "DegradationConfig":
        if self.scale_max < self.scale_min:
            raise ValueError("scale_max must be >= scale_min")
        if self.scale_choices is not None:
            if not self.scale_choices:
                raise ValueError("scale_choices must not be empty")
            if any(s < 1.0 for s in self.scale_choices):
                raise ValueError("scale_choices entries must be >= 1")
        return self

    @property
    def queries_per_patch(self) -> int:
        return self.patch_lr * self.patch_lr
