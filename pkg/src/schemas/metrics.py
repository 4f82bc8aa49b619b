"""
Pydantic schemas for image-quality scoring.
"""

from __future__ import annotations

import math
from enum import Enum
from typing import Optional

from pydantic import BaseModel, Field


class MetricMode(str, Enum):
    rgb = "rgb"
    y_channel = "y"


class MetricConfig(BaseModel):
    mode: MetricMode = MetricMode.rgb
    border_shave: int = Field(default=0, ge=0)
    data_range: float = Field(default=1.0, gt=0)

    @classmethod
    def for_scale(cls, mode: MetricMode, scale: Optional[float] = None) -> "MetricConfig":
        """Benchmark convention: shave ⌈s⌉ pixels for Y-channel scores, none for RGB."""
        shave = 0
        if mode == MetricMode.y_channel and scale is not None:
            shave = int(math.ceil(scale))
        return cls(mode=mode, border_shave=shave)
