"""
Feature backbones producing the latent code map at LR resolution.
"""

from __future__ import annotations

from typing import Callable, Dict, List

import numpy as np

from src.core.errors import ConfigError, ShapeError
from src.engine import functional as F
from src.engine.tensor import Tensor
from src.models.base import Module
from src.models.layers import Conv2d
from src.schemas.model import EncoderConfig


class Encoder(Module):
    """Interface: N×in_channels×H×W image → N×out_channels×H×W features."""

    out_channels: int

    def encode(self, lr_image: Tensor) -> Tensor:
        if lr_image.ndim != 4:
            raise ShapeError(f"encoder expects N×C×H×W input, got shape {lr_image.shape}")
        feat = self.forward(lr_image)
        if feat.shape[2:] != lr_image.shape[2:]:
            raise ShapeError("encoder changed the spatial size")
        return feat


class ResBlock(Module):
    def __init__(self, n_feats: int, res_scale: float, rng: np.random.Generator):
        self.conv1 = Conv2d(n_feats, n_feats, 3, rng)
        self.conv2 = Conv2d(n_feats, n_feats, 3, rng)
        self.res_scale = res_scale

    def forward(self, x: Tensor) -> Tensor:
        res = self.conv2(F.relu(self.conv1(x)))
        if self.res_scale != 1.0:
            res = res * self.res_scale
        return res + x


class EDSRBaseline(Encoder):
    """Head conv → residual blocks → tail conv, with a global skip from the head output."""

    def __init__(self, cfg: EncoderConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.out_channels = cfg.n_feats
        self.head = Conv2d(cfg.in_channels, cfg.n_feats, 3, rng)
        self.body: List[ResBlock] = [
            ResBlock(cfg.n_feats, cfg.res_scale, rng) for _ in range(cfg.n_resblocks)
        ]
        self.tail = Conv2d(cfg.n_feats, cfg.n_feats, 3, rng)

    def forward(self, x: Tensor) -> Tensor:
        if x.shape[1] != self.cfg.in_channels:
            raise ShapeError(f"encoder expects {self.cfg.in_channels} channels, got {x.shape[1]}")
        h = self.head(x)
        res = h
        for block in self.body:
            res = block(res)
        return self.tail(res) + h


ENCODERS: Dict[str, Callable[[EncoderConfig, np.random.Generator], Encoder]] = {
    "edsr-baseline": EDSRBaseline,
}


def build_encoder(cfg: EncoderConfig, rng: np.random.Generator) -> Encoder:
    try:
        factory = ENCODERS[cfg.name]
    except KeyError:
        raise ConfigError(f"unknown encoder '{cfg.name}' (known: {', '.join(ENCODERS)})") from None
    return factory(cfg, rng)


def encode(lr_image: Tensor, encoder: Encoder) -> Tensor:
    """Latent code map F_LR for a batch of LR images."""
    return encoder.encode(lr_image)
