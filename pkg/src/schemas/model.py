"""
Pydantic schemas for network configuration.
"""

from __future__ import annotations

from enum import Enum
from typing import List

from pydantic import BaseModel, Field, field_validator, model_validator


class Variant(str, Enum):
    """Model variants compared by the ablation command."""

    full = "full"
    no_nonlocal = "no_nonlocal"
    mlp_weights = "mlp_weights"
    liif = "liif"


class EncoderConfig(BaseModel):
    """Residual CNN backbone without upsampler."""

    name: str = "edsr-baseline"
    n_resblocks: int = Field(default=4, ge=1)
    n_feats: int = Field(default=64, ge=1)
    in_channels: int = Field(default=3, ge=1)
    res_scale: float = Field(default=1.0, gt=0)


class HeadConfig(BaseModel):
    """Local-ensemble attention head."""

    query_hidden: List[int] = Field(default_factory=lambda: [256, 256, 256, 256])
    kv_hidden: List[int] = Field(default_factory=lambda: [256, 256])
    value_dim: int = Field(default=256, ge=1)
    local_size: int = Field(default=2, ge=1, le=3)
    unfold_query: bool = True
    scale_logits: bool = False
    scale_offsets: bool = True
    weight_hidden: List[int] = Field(default_factory=lambda: [256, 256])
    baseline_hidden: List[int] = Field(default_factory=lambda: [256, 256, 256, 256])

    @field_validator("query_hidden", "kv_hidden", "weight_hidden", "baseline_hidden")
    @classmethod
    def widths_positive(cls, v: List[int]) -> List[int]:
        if any(w < 1 for w in v):
            raise ValueError("hidden widths must be positive")
        return v


class NonLocalConfig(BaseModel):
    """Scale-aware non-local attention."""

    channels: int = Field(default=64, ge=1)
    scale_set: List[int] = Field(default_factory=lambda: [2, 3, 4])
    scale_logits: bool = False

    @field_validator("scale_set")
    @classmethod
    def scales_at_least_two(cls, v: List[int]) -> List[int]:
        if not v:
            raise ValueError("scale_set must not be empty")
        if any(s < 2 for s in v):
            raise ValueError("scale_set entries must be >= 2")
        return v


class ModelConfig(BaseModel):
    variant: Variant = Variant.full
    encoder: EncoderConfig = Field(default_factory=EncoderConfig)
    head: HeadConfig = Field(default_factory=HeadConfig)
    nonlocal_attention: NonLocalConfig = Field(default_factory=NonLocalConfig)

    @model_validator(mode="after")
    def liif_uses_two_by_two(self) -> "ModelConfig":
        if self.variant == Variant.liif and self.head.local_size != 2:
            raise ValueError("the area-weighted baseline is defined on a 2×2 neighbourhood")
        return self

    @property
    def uses_nonlocal(self) -> bool:
        return self.variant in (Variant.full, Variant.mlp_weights)
