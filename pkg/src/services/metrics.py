"""
Full-reference image quality: PSNR (RGB or Y) and SSIM.

Inputs are C×H×W arrays in [0, 1]; everything is computed in float64.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
from skimage.metrics import structural_similarity

from src.core.errors import ShapeError
from src.schemas.metrics import MetricConfig, MetricMode

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03

_Y_COEFFS = np.array([65.481, 128.553, 24.966], dtype=np.float64)


def rgb_to_y(img: np.ndarray) -> np.ndarray:
    """BT.601 luma of a 3×H×W RGB image, in [16/255, 235/255]; returns H×W."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[0] != 3:
        raise ShapeError(f"rgb_to_y expects 3×H×W, got shape {img.shape}")
    return (np.tensordot(_Y_COEFFS, img, axes=(0, 0)) + 16.0) / 255.0


def shave(img: np.ndarray, border: int) -> np.ndarray:
    if border == 0:
        return img
    h, w = img.shape[-2:]
    if 2 * border >= min(h, w):
        raise ShapeError(f"border shave {border} leaves nothing of a {h}×{w} image")
    return img[..., border:-border, border:-border]


def _prepare(pred: np.ndarray, gt: np.ndarray, cfg: MetricConfig) -> tuple:
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ShapeError(f"shape mismatch: {pred.shape} vs {gt.shape}")
    if cfg.mode == MetricMode.y_channel:
        pred, gt = rgb_to_y(pred), rgb_to_y(gt)
    return shave(pred, cfg.border_shave), shave(gt, cfg.border_shave)


def psnr(pred: np.ndarray, gt: np.ndarray, cfg: Optional[MetricConfig] = None) -> float:
    """10·log10(range² / MSE); identical images give +inf."""
    cfg = cfg or MetricConfig()
    a, b = _prepare(pred, gt, cfg)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(cfg.data_range**2 / mse)


def ssim(pred: np.ndarray, gt: np.ndarray, cfg: Optional[MetricConfig] = None) -> float:
    """Gaussian-weighted SSIM (σ = 1.5, 11×11 support) of the luminance channel.

    Border windows that would need padding are excluded from the mean.
    """
    cfg = cfg or MetricConfig()
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ShapeError(f"shape mismatch: {pred.shape} vs {gt.shape}")
    if pred.ndim == 3 and pred.shape[0] == 3:
        pred, gt = rgb_to_y(pred), rgb_to_y(gt)
    elif pred.ndim == 3 and pred.shape[0] == 1:
        pred, gt = pred[0], gt[0]
    elif pred.ndim != 2:
        raise ShapeError(f"ssim expects H×W, 1×H×W or 3×H×W, got shape {pred.shape}")
    pred, gt = shave(pred, cfg.border_shave), shave(gt, cfg.border_shave)
    if min(pred.shape) < SSIM_WINDOW:
        raise ShapeError(f"image {pred.shape} is smaller than the {SSIM_WINDOW}×{SSIM_WINDOW} window")
    return float(
        structural_similarity(
            pred,
            gt,
            data_range=cfg.data_range,
            gaussian_weights=True,
            sigma=SSIM_SIGMA,
            use_sample_covariance=False,
            K1=SSIM_K1,
            K2=SSIM_K2,
        )
    )
