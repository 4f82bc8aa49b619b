"""
Image-level super-resolution: output-size resolution, single-step rendering
and multi-step chains.
"""

from __future__ import annotations

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.core.errors import ShapeError
from src.core.logging import get_logger
from src.engine.tensor import Tensor, no_grad
from src.models.network import SuperResolutionModel

logger = get_logger(__name__)

# Absorbs float error when a product lands on an integer (e.g. 10·1.1).
_CEIL_TOL = 1e-9


def _half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def output_size(
    h: int,
    w: int,
    scale: Optional[Tuple[float, float]] = None,
    size: Optional[Tuple[int, int]] = None,
) -> Tuple[int, int]:
    """Explicit size wins; otherwise round(s_h·H) × round(s_w·W), halves rounding up."""
    if size is not None:
        if size[0] < 1 or size[1] < 1:
            raise ShapeError(f"output size must be positive, got {size[0]}×{size[1]}")
        return int(size[0]), int(size[1])
    if scale is None:
        raise ShapeError("either a scale or an explicit size is required")
    s_h, s_w = scale
    if not (math.isfinite(s_h) and math.isfinite(s_w)) or s_h < 1.0 or s_w < 1.0:
        raise ShapeError(f"scale must be a finite real >= 1, got ({s_h}, {s_w})")
    return max(1, _half_up(s_h * h)), max(1, _half_up(s_w * w))


def super_resolve(
    model: SuperResolutionModel,
    lr_image: np.ndarray,
    h_out: int,
    w_out: int,
    chunk_size: Optional[int] = None,
) -> np.ndarray:
    """3×H×W LR image → 3×H_out×W_out prediction (unclamped).

    An unchanged size returns the input itself.
    """
    if lr_image.ndim != 3 or lr_image.shape[0] != 3:
        raise ShapeError(f"expected a 3×H×W image, got shape {lr_image.shape}")
    _, h, w = lr_image.shape
    if (h_out, w_out) == (h, w):
        return lr_image.astype(np.float32, copy=True)
    with no_grad():
        out = model(Tensor(lr_image[None], dtype=model.dtype), h_out, w_out, chunk_size)
    return out.data[0].astype(np.float32)


def chain_sizes(h: int, w: int, scale_chain: Sequence[float], target: Tuple[int, int]) -> List[Tuple[int, int]]:
    """Sizes after each step: ceil of the running product, with the last step forced to `target`."""
    if not scale_chain:
        raise ShapeError("scale chain is empty")
    if any(not math.isfinite(s) or s <= 1.0 for s in scale_chain):
        raise ShapeError(f"every chain scale must exceed 1, got {list(scale_chain)}")
    sizes = []
    total = 1.0
    for s in scale_chain[:-1]:
        total *= s
        sizes.append((math.ceil(h * total - _CEIL_TOL), math.ceil(w * total - _CEIL_TOL)))
    sizes.append(target)
    return sizes


def chain_render(
    lr_image: np.ndarray,
    scale_chain: Sequence[float],
    model: SuperResolutionModel,
    target: Optional[Tuple[int, int]] = None,
) -> np.ndarray:
    """Super-resolve in several steps, feeding each output back as the next input."""
    _, h, w = lr_image.shape
    if target is None:
        total = float(np.prod(scale_chain))
        target = output_size(h, w, scale=(total, total))
    image = lr_image
    for step, (h_out, w_out) in enumerate(chain_sizes(h, w, scale_chain, target)):
        logger.debug("Chain step", step=step, height=h_out, width=w_out)
        image = super_resolve(model, image, h_out, w_out)
    return image
