"""
PNG / binary PPM (P6) reading and writing via Pillow.

Images are 3×H×W float32 arrays in [0, 1].
"""

from __future__ import annotations

from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from src.core.errors import ImageFormatError
from src.core.logging import get_logger

logger = get_logger(__name__)

FORMATS = {".png": "PNG", ".ppm": "PPM"}

PathLike = Union[str, Path]


def _format_for(path: Path) -> str:
    try:
        return FORMATS[path.suffix.lower()]
    except KeyError:
        raise ImageFormatError(
            f"unsupported image format '{path.suffix}' for {path} (supported: {', '.join(FORMATS)})"
        ) from None


def load_image(path: PathLike) -> np.ndarray:
    path = Path(path)
    expected = _format_for(path)
    if not path.is_file():
        raise ImageFormatError(f"image not found: {path}")
    try:
        with Image.open(path) as im:
            im.load()
            fmt, mode = im.format, im.mode
            pixels = np.asarray(im)
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise ImageFormatError(f"cannot decode {path}: {exc}") from exc

    if fmt != expected:
        raise ImageFormatError(f"{path} holds {fmt} data, expected {expected}")
    if mode != "RGB" or pixels.dtype != np.uint8:
        raise ImageFormatError(f"{path} is {mode}; only 8-bit RGB images are supported")
    return np.ascontiguousarray(pixels.transpose(2, 0, 1)).astype(np.float32) / np.float32(255.0)


def to_uint8(img: np.ndarray) -> np.ndarray:
    """Clamp to [0, 1] and quantise with round-half-to-even; returns H×W×3 bytes."""
    if img.ndim != 3 or img.shape[0] != 3:
        raise ImageFormatError(f"expected a 3×H×W image, got shape {img.shape}")
    scaled = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0) * 255.0
    return np.rint(scaled).astype(np.uint8).transpose(1, 2, 0)


def save_image(img: np.ndarray, path: PathLike) -> Path:
    path = Path(path)
    fmt = _format_for(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.ascontiguousarray(to_uint8(img))).save(path, format=fmt)
    logger.debug("Saved image", path=str(path), height=img.shape[1], width=img.shape[2])
    return path


def quantize(img: np.ndarray) -> np.ndarray:
    """The values `save_image` followed by `load_image` would produce."""
    return to_uint8(img).transpose(2, 0, 1).astype(np.float32) / np.float32(255.0)
