"""
Pydantic schemas for the checkpoint header.
"""

from __future__ import annotations

from typing import List

from pydantic import BaseModel, Field

from src.schemas.model import ModelConfig


class ParameterSpec(BaseModel):
    name: str
    shape: List[int]

    @property
    def numel(self) -> int:
        n = 1
        for d in self.shape:
            n *= d
        return n


class SamplerState(BaseModel):
    """Data-sampling streams are keyed by (seed, step), so this pair is the full RNG state."""

    seed: int = 0
    step: int = 0


class CheckpointHeader(BaseModel):
    model: ModelConfig
    parameters: List[ParameterSpec]
    dtype: str = "float32"
    step: int = Field(default=0, ge=0)
    rng: SamplerState = Field(default_factory=SamplerState)

    @property
    def payload_bytes(self) -> int:
        return sum(p.numel for p in self.parameters) * 4

    @property
    def parameter_count(self) -> int:
        return sum(p.numel for p in self.parameters)
