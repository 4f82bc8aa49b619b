"""
Seeded synthetic texture images.

Each image mixes oriented sinusoidal gratings, a checkerboard and a random
motif tiled at two magnifications, so it contains the cross-scale repetition
the non-local branch is built to exploit. Generation is a pure function of
(seed, index, size).
"""

from __future__ import annotations

from typing import List

import numpy as np

from src.engine.random import make_rng

_STREAM = 7
DEFAULT_SIZE = 192


def _grating(rng: np.random.Generator, yy: np.ndarray, xx: np.ndarray) -> np.ndarray:
    theta = rng.uniform(0.0, np.pi)
    freq = rng.uniform(2.0, 12.0)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    return 0.5 + 0.5 * np.sin(2.0 * np.pi * freq * (xx * np.cos(theta) + yy * np.sin(theta)) + phase)


def _checker(rng: np.random.Generator, yy: np.ndarray, xx: np.ndarray) -> np.ndarray:
    cells = int(rng.integers(4, 17))
    return ((np.floor(yy * cells) + np.floor(xx * cells)) % 2).astype(np.float64)


def _motif(rng: np.random.Generator, size: int) -> np.ndarray:
    tile = int(rng.integers(4, 13))
    base = rng.random((tile, tile))
    small = np.tile(base, (size // tile + 1, size // tile + 1))[:size, :size]
    large = np.kron(base, np.ones((2, 2)))
    large = np.tile(large, (size // (2 * tile) + 1, size // (2 * tile) + 1))[:size, :size]
    return 0.5 * (small + large)


def texture_image(rng: np.random.Generator, size: int = DEFAULT_SIZE) -> np.ndarray:
    """One 3×size×size float32 texture in [0, 1]."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) / size
    layers = np.stack([_grating(rng, yy, xx), _grating(rng, yy, xx), _checker(rng, yy, xx), _motif(rng, size)])
    mix = rng.dirichlet(np.ones(len(layers)), size=3)  # 3 channels × layers
    img = np.einsum("cl,lhw->chw", mix, layers)
    lo = img.min(axis=(1, 2), keepdims=True)
    hi = img.max(axis=(1, 2), keepdims=True)
    img = (img - lo) / np.maximum(hi - lo, 1e-12)
    return img.astype(np.float32)


def synthetic_images(count: int, size: int = DEFAULT_SIZE, seed: int = 0) -> List[np.ndarray]:
    return [texture_image(make_rng(seed, _STREAM, i), size) for i in range(count)]
