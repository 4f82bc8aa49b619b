"""
Scale sweeps: degrade each GT image by s, super-resolve back to GT size and
score the result against GT and against bicubic upsampling.
"""

from __future__ import annotations

import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from src.core.config import settings
from src.core.errors import DataError
from src.core.logging import get_logger
from src.models.network import SuperResolutionModel
from src.schemas.evaluation import EvaluationRow
from src.schemas.metrics import MetricConfig, MetricMode
from src.services.data_pipeline import Dataset
from src.services.metrics import SSIM_WINDOW, psnr, ssim
from src.services.rendering_service import super_resolve
from src.services.resampling import bicubic_resize

logger = get_logger(__name__)

MIN_LR_SIDE = 8

Upsampler = Callable[[np.ndarray, int, int], np.ndarray]


@dataclass(frozen=True)
class ImageScores:
    psnr_rgb: float
    psnr_y: float
    ssim: float


def lr_size(h: int, w: int, scale: float) -> tuple:
    return max(1, int(round(h / scale))), max(1, int(round(w / scale)))


def degrade(gt: np.ndarray, scale: float) -> np.ndarray:
    _, h, w = gt.shape
    return bicubic_resize(gt, *lr_size(h, w, scale))


def score(pred: np.ndarray, gt: np.ndarray, scale: float) -> ImageScores:
    rgb_cfg = MetricConfig.for_scale(MetricMode.rgb, scale)
    y_cfg = MetricConfig.for_scale(MetricMode.y_channel, scale)
    return ImageScores(
        psnr_rgb=psnr(pred, gt, rgb_cfg),
        psnr_y=psnr(pred, gt, y_cfg),
        ssim=ssim(pred, gt, y_cfg),
    )


def model_upsampler(model: SuperResolutionModel) -> Upsampler:
    return lambda lr, h, w: super_resolve(model, lr, h, w)


def bicubic_upsampler(lr: np.ndarray, h: int, w: int) -> np.ndarray:
    if lr.shape[1:] == (h, w):
        return lr.astype(np.float32, copy=True)
    return bicubic_resize(lr, h, w)


def _mean(values: Sequence[float]) -> float:
    return float(statistics.fmean(values))


def evaluate_upsampler(
    upsample: Upsampler,
    dataset: Dataset,
    scales: Sequence[float],
    baseline: Optional[Upsampler] = None,
) -> List[EvaluationRow]:
    """Per-scale mean scores for `upsample`, the bicubic column and an optional baseline."""
    if len(dataset) == 0:
        raise DataError("evaluation dataset is empty")
    rows: List[EvaluationRow] = []
    for scale in scales:
        usable = []
        for index in range(len(dataset)):
            _, h, w = dataset[index].shape
            hl, wl = lr_size(h, w, scale)
            if min(hl, wl) < MIN_LR_SIDE:
                logger.warning("Skipping image: LR side below minimum", image=index, scale=scale, lr_height=hl, lr_width=wl)
                continue
            if min(h, w) - 2 * math.ceil(scale) < SSIM_WINDOW:
                logger.warning("Skipping image: too small to score", image=index, scale=scale, height=h, width=w)
                continue
            usable.append(index)
        if not usable:
            logger.warning("Skipping scale: no image large enough", scale=scale)
            continue

        def run(index: int):
            gt = dataset[index]
            lr = degrade(gt, scale)
            _, h, w = gt.shape
            ours = score(upsample(lr, h, w), gt, scale)
            cubic = score(bicubic_upsampler(lr, h, w), gt, scale)
            other = score(baseline(lr, h, w), gt, scale) if baseline else None
            return ours, cubic, other

        if settings.threads > 1 and len(usable) > 1:
            with ThreadPoolExecutor(max_workers=settings.threads) as pool:
                results = list(pool.map(run, usable))
        else:
            results = [run(i) for i in usable]

        ours = [r[0] for r in results]
        cubic = [r[1] for r in results]
        other = [r[2] for r in results if r[2] is not None]
        row = EvaluationRow(
            scale=scale,
            group=EvaluationRow.group_of(scale),
            images=len(results),
            psnr_rgb=_mean([s.psnr_rgb for s in ours]),
            psnr_y=_mean([s.psnr_y for s in ours]),
            ssim=_mean([s.ssim for s in ours]),
            bicubic_psnr_rgb=_mean([s.psnr_rgb for s in cubic]),
            bicubic_psnr_y=_mean([s.psnr_y for s in cubic]),
            bicubic_ssim=_mean([s.ssim for s in cubic]),
            baseline_psnr_rgb=_mean([s.psnr_rgb for s in other]) if other else None,
            baseline_psnr_y=_mean([s.psnr_y for s in other]) if other else None,
        )
        logger.info("Evaluated scale", scale=scale, group=row.group, images=row.images, psnr_rgb=round(row.psnr_rgb, 3))
        rows.append(row)
    return rows


def evaluate(
    model: SuperResolutionModel,
    dataset: Dataset,
    scales: Sequence[float],
    baseline: Optional[SuperResolutionModel] = None,
) -> List[EvaluationRow]:
    return evaluate_upsampler(
        model_upsampler(model),
        dataset,
        scales,
        model_upsampler(baseline) if baseline is not None else None,
    )
