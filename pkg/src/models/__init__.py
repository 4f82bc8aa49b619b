# flake8: noqa
from .base import Module
from .layers import Conv2d, Linear, MLP
from .encoder import EDSRBaseline, Encoder, ResBlock, build_encoder, encode
from .nonlocal_attention import NonLocalAttention, nonlocal_features, tiled_nonlocal
from .local_attention import (
    CiaoSRHead,
    LIIFHead,
    QueryBatch,
    render,
    render_liif_baseline,
    render_mlp_weight_ablation,
)
from .network import SuperResolutionModel
