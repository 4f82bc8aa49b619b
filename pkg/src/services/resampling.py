"""
Separable bicubic resampling with antialiasing on downscale.

Each axis is resized by a dense (n_out × n_in) weight matrix built from the
cubic-convolution kernel. Output pixel i samples source position
(i + 0.5)·(n_in / n_out) − 0.5; when shrinking, the kernel is stretched by
the shrink factor. Taps falling outside the image replicate the edge pixel
and every row of weights is renormalised to sum to one.
"""

from __future__ import annotations

import math

import numpy as np

from src.core.errors import ShapeError

BICUBIC_A = -0.75


def cubic_kernel(x: np.ndarray, a: float = BICUBIC_A) -> np.ndarray:
    x = np.abs(np.asarray(x, dtype=np.float64))
    x2 = x * x
    x3 = x2 * x
    near = (a + 2.0) * x3 - (a + 3.0) * x2 + 1.0
    far = a * x3 - 5.0 * a * x2 + 8.0 * a * x - 4.0 * a
    return np.where(x <= 1.0, near, np.where(x < 2.0, far, 0.0))


def resize_weights(n_in: int, n_out: int, a: float = BICUBIC_A, antialias: bool = True) -> np.ndarray:
    """Row-stochastic matrix W with out = W @ in along one axis."""
    if n_in < 1 or n_out < 1:
        raise ShapeError(f"resize sizes must be positive, got {n_in} → {n_out}")
    ratio = n_in / n_out
    stretch = ratio if (antialias and ratio > 1.0) else 1.0
    support = 2.0 * stretch

    centers = (np.arange(n_out, dtype=np.float64) + 0.5) * ratio - 0.5
    first = np.floor(centers - support).astype(np.int64)
    taps = int(math.ceil(2.0 * support)) + 2
    idx = first[:, None] + np.arange(taps)
    w = cubic_kernel((idx - centers[:, None]) / stretch, a)
    w /= w.sum(axis=1, keepdims=True)

    matrix = np.zeros((n_out, n_in), dtype=np.float64)
    rows = np.repeat(np.arange(n_out), taps)
    np.add.at(matrix, (rows, np.clip(idx, 0, n_in - 1).ravel()), w.ravel())
    return matrix


def bicubic_resize(
    img: np.ndarray,
    h_out: int,
    w_out: int,
    a: float = BICUBIC_A,
    antialias: bool = True,
) -> np.ndarray:
    """Resize a C×H×W (or H×W) image; float inputs keep their dtype."""
    if img.ndim not in (2, 3):
        raise ShapeError(f"bicubic_resize expects C×H×W or H×W, got shape {img.shape}")
    if h_out < 1 or w_out < 1:
        raise ShapeError(f"target size must be positive, got {h_out}×{w_out}")
    h, w = img.shape[-2:]
    dtype = img.dtype if np.issubdtype(img.dtype, np.floating) else np.float64
    if (h, w) == (h_out, w_out):
        return img.astype(dtype, copy=True)

    wh = resize_weights(h, h_out, a, antialias)
    ww = resize_weights(w, w_out, a, antialias)
    x = img.astype(np.float64)
    out = np.einsum("oh,...hw,pw->...op", wh, x, ww, optimize=True)
    return out.astype(dtype)
