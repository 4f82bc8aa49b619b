"""
Scale-aware non-local attention producing the auxiliary feature map G.

Each LR position attends over key/value tokens taken from mean-pooled copies
of the whole feature map at every factor in `scale_set`. All scales' tokens
share one softmax.
"""

from __future__ import annotations

import math
from typing import List, Optional, Sequence

import numpy as np

from src.core.config import settings
from src.core.errors import ShapeError
from src.core.logging import get_logger
from src.engine import functional as F
from src.engine.tensor import Tensor
from src.models.base import Module
from src.models.layers import Conv2d
from src.schemas.model import NonLocalConfig

logger = get_logger(__name__)


class NonLocalAttention(Module):
    """1×1 projections φ_q, φ_k, φ_v (C → C_g), shared by all scales."""

    def __init__(self, in_channels: int, cfg: NonLocalConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.in_channels = in_channels
        self.out_channels = cfg.channels
        self.proj_q = Conv2d(in_channels, cfg.channels, 1, rng)
        self.proj_k = Conv2d(in_channels, cfg.channels, 1, rng)
        self.proj_v = Conv2d(in_channels, cfg.channels, 1, rng)

    def forward(self, feat: Tensor) -> Tensor:
        return nonlocal_or_tiled(feat, self)


def usable_scales(scale_set: Sequence[int], h: int, w: int) -> List[int]:
    usable = [s for s in scale_set if s <= min(h, w)]
    skipped = [s for s in scale_set if s > min(h, w)]
    if skipped:
        logger.warning("Skipping non-local scales larger than the feature map", skipped=skipped, height=h, width=w)
    return usable


def nonlocal_features(
    feat: Tensor,
    params: NonLocalAttention,
    max_pixels: Optional[int] = None,
) -> Tensor:
    """G = softmax(Q_g K_g) V_g over multi-scale tokens; N×C_g×H×W."""
    if feat.ndim != 4 or feat.shape[1] != params.in_channels:
        raise ShapeError(
            f"non-local attention expects N×{params.in_channels}×H×W features, got {feat.shape}"
        )
    n, _, h, w = feat.shape
    cap = settings.nonlocal_max_pixels if max_pixels is None else max_pixels
    if h * w > cap:
        raise ShapeError(f"feature map {h}×{w} exceeds the non-local cap of {cap} pixels; tile it")

    q = F.flatten_spatial(params.proj_q(feat))  # N×HW×Cg
    scales = usable_scales(params.cfg.scale_set, h, w)
    v_full = params.proj_v(feat)

    keys: List[Tensor] = []
    vals: List[Tensor] = []
    for s in scales:
        keys.append(F.flatten_spatial(params.proj_k(F.avg_downsample(feat, s))))
        vals.append(F.flatten_spatial(F.avg_downsample(v_full, s)))
    if not scales:
        # Map smaller than every factor: attend over full-resolution tokens.
        keys.append(F.flatten_spatial(params.proj_k(feat)))
        vals.append(F.flatten_spatial(v_full))

    k = F.concat(keys, axis=1)  # N×T×Cg
    v = F.concat(vals, axis=1)  # N×T×Cg
    logits = F.matmul(q, F.transpose(k, (0, 2, 1)))  # N×HW×T
    if params.cfg.scale_logits:
        logits = logits * (1.0 / math.sqrt(params.out_channels))
    attn = F.softmax(logits, axis=-1)
    return F.unflatten_spatial(F.matmul(attn, v), h, w)


def tiled_nonlocal(feat: Tensor, params: NonLocalAttention, tile: int) -> Tensor:
    """Non-local features computed per abutting tile with tile-local token sets."""
    if tile < max(params.cfg.scale_set):
        raise ShapeError(f"tile {tile} is smaller than the largest scale factor {max(params.cfg.scale_set)}")
    if tile * tile > settings.nonlocal_max_pixels:
        raise ShapeError(f"tile {tile} exceeds the non-local cap of {settings.nonlocal_max_pixels} pixels")
    _, _, h, w = feat.shape
    if h <= tile and w <= tile:
        return nonlocal_features(feat, params)
    rows = []
    for top in range(0, h, tile):
        cols = []
        for left in range(0, w, tile):
            block = feat[:, :, top : top + tile, left : left + tile]
            cols.append(nonlocal_features(block, params))
        rows.append(F.concat(cols, axis=3))
    return F.concat(rows, axis=2)


def nonlocal_or_tiled(feat: Tensor, params: NonLocalAttention) -> Tensor:
    _, _, h, w = feat.shape
    if h * w <= settings.nonlocal_max_pixels:
        return nonlocal_features(feat, params)
    logger.debug("Tiling non-local attention", height=h, width=w, tile=settings.nonlocal_tile)
    return tiled_nonlocal(feat, params, settings.nonlocal_tile)
