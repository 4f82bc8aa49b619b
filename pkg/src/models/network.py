"""
The complete super-resolution network: encoder, optional non-local branch and
one of the ensemble heads, selected by `ModelConfig.variant`.
"""

from __future__ import annotations

from typing import Optional, Tuple, Union

import numpy as np

from src.core.errors import ShapeError
from src.engine.random import make_rng
from src.engine.tensor import Tensor
from src.models.base import Module
from src.models.encoder import build_encoder
from src.models.local_attention import (
    CiaoSRHead,
    LIIFHead,
    QueryBatch,
    render,
    render_liif_baseline,
    render_mlp_weight_ablation,
)
from src.models.nonlocal_attention import NonLocalAttention
from src.schemas.model import ModelConfig, Variant

# Independent initialisation streams per component, so variants built from
# the same seed share encoder and head weights.
_ENCODER_STREAM = 1
_NONLOCAL_STREAM = 2
_HEAD_STREAM = 3


class SuperResolutionModel(Module):
    def __init__(self, cfg: ModelConfig, seed: int = 0):
        self.cfg = cfg
        self.seed = seed
        self.encoder = build_encoder(cfg.encoder, make_rng(seed, _ENCODER_STREAM))
        channels = self.encoder.out_channels
        self.nonlocal_branch: Optional[NonLocalAttention] = None
        if cfg.uses_nonlocal:
            self.nonlocal_branch = NonLocalAttention(
                channels, cfg.nonlocal_attention, make_rng(seed, _NONLOCAL_STREAM)
            )
        head_rng = make_rng(seed, _HEAD_STREAM)
        self.head: Union[CiaoSRHead, LIIFHead]
        if cfg.variant == Variant.liif:
            self.head = LIIFHead(channels, cfg.head, head_rng)
        else:
            self.head = CiaoSRHead(
                channels,
                cfg.nonlocal_attention.channels,
                cfg.head,
                head_rng,
                ensemble="mlp" if cfg.variant == Variant.mlp_weights else "attention",
            )

    @property
    def variant(self) -> Variant:
        return self.cfg.variant

    def features(self, lr_image: Tensor) -> Tuple[Tensor, Optional[Tensor]]:
        """Latent map F_LR and the auxiliary map G (all zeros without the non-local branch)."""
        if lr_image.ndim != 4 or lr_image.shape[1] != 3:
            raise ShapeError(f"model expects N×3×H×W input, got {lr_image.shape}")
        feat = self.encoder.encode(lr_image)
        if self.nonlocal_branch is not None:
            return feat, self.nonlocal_branch(feat)
        if self.cfg.variant == Variant.liif:
            return feat, None
        n, _, h, w = feat.shape
        zeros = np.zeros((n, self.cfg.nonlocal_attention.channels, h, w), dtype=feat.dtype)
        return feat, Tensor(zeros)

    def query(self, lr_image: Tensor, coords: np.ndarray, scale: np.ndarray) -> Tensor:
        """RGB at arbitrary query coordinates (N×Q×3); the training path."""
        feat, g = self.features(lr_image)
        return self.head(feat, g, QueryBatch(coords, scale))

    def forward(self, lr_image: Tensor, h_out: int, w_out: int, chunk_size: Optional[int] = None) -> Tensor:
        feat, g = self.features(lr_image)
        return self.render_features(feat, g, h_out, w_out, chunk_size)

    def render_features(
        self,
        feat: Tensor,
        g: Optional[Tensor],
        h_out: int,
        w_out: int,
        chunk_size: Optional[int] = None,
    ) -> Tensor:
        if self.cfg.variant == Variant.liif:
            return render_liif_baseline(feat, h_out, w_out, self.head, chunk_size)
        if self.cfg.variant == Variant.mlp_weights:
            return render_mlp_weight_ablation(feat, h_out, w_out, self.head, g, chunk_size)
        return render(feat, g, h_out, w_out, self.head, chunk_size)

    def head_parameters(self) -> int:
        return self.head.num_parameters()
