"""
Model size and render timing.
"""

from __future__ import annotations

import statistics
import time
from typing import List, Optional

import numpy as np

from src.core.logging import get_logger
from src.models.network import SuperResolutionModel
from src.schemas.evaluation import BenchRow
from src.services.rendering_service import super_resolve

logger = get_logger(__name__)


def time_renders(model: SuperResolutionModel, lr_image: np.ndarray, h_out: int, w_out: int, repeat: int) -> List[float]:
    durations = []
    for _ in range(repeat):
        start = time.perf_counter()
        super_resolve(model, lr_image, h_out, w_out)
        durations.append(time.perf_counter() - start)
    return durations


def bench(
    model: SuperResolutionModel,
    lr_image: np.ndarray,
    h_out: int,
    w_out: int,
    repeat: int,
    header_parameters: Optional[int] = None,
) -> BenchRow:
    durations = time_renders(model, lr_image, h_out, w_out, repeat)
    median = statistics.median(durations)
    total = model.num_parameters()
    row = BenchRow(
        parameters=total,
        parameters_m=total / 1e6,
        head_parameters=model.head_parameters(),
        header_parameters=total if header_parameters is None else header_parameters,
        repeat=repeat,
        median_seconds=median,
        queries_per_second=(h_out * w_out) / median if median > 0 else float("inf"),
        output_height=h_out,
        output_width=w_out,
    )
    logger.info(
        "Benchmark finished",
        parameters=row.parameters,
        head_parameters=row.head_parameters,
        repeat=repeat,
        median_seconds=round(median, 4),
    )
    return row
