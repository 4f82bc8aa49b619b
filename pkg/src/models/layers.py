"""
Building blocks: linear layer, 2-D convolution, ReLU MLP.
"""

from __future__ import annotations

from typing import List, Sequence

import numpy as np

from src.core.errors import ShapeError
from src.engine import functional as F
from src.engine.random import bias_uniform, he_uniform
from src.engine.tensor import Parameter, Tensor
from src.models.base import Module


class Linear(Module):
    """y = x W + b over the last axis; W is stored in×out."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        self.in_features = in_features
        self.out_features = out_features
        self.weight = Parameter(he_uniform((in_features, out_features), in_features, rng))
        self.bias = Parameter(bias_uniform(out_features, in_features, rng))

    def forward(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.in_features:
            raise ShapeError(f"Linear expects {self.in_features} features, got {x.shape[-1]}")
        lead = x.shape[:-1]
        flat = F.reshape(x, (-1, self.in_features)) if x.ndim != 2 else x
        y = F.matmul(flat, self.weight) + self.bias
        return F.reshape(y, (*lead, self.out_features)) if x.ndim != 2 else y


class Conv2d(Module):
    def __init__(self, in_channels: int, out_channels: int, kernel_size: int, rng: np.random.Generator):
        fan_in = in_channels * kernel_size * kernel_size
        self.padding = kernel_size // 2
        self.weight = Parameter(
            he_uniform((out_channels, in_channels, kernel_size, kernel_size), fan_in, rng)
        )
        self.bias = Parameter(bias_uniform(out_channels, fan_in, rng))

    def forward(self, x: Tensor) -> Tensor:
        return F.conv2d(x, self.weight, self.bias, padding=self.padding)


class MLP(Module):
    """Linear layers with ReLU between them and none after the last."""

    def __init__(self, in_dim: int, hidden: Sequence[int], out_dim: int, rng: np.random.Generator):
        dims = [in_dim, *hidden, out_dim]
        self.layers: List[Linear] = [Linear(a, b, rng) for a, b in zip(dims[:-1], dims[1:])]

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_features

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_features

    def forward(self, x: Tensor) -> Tensor:
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = F.relu(x)
        return x
