"""
Continuous image-domain coordinates.

Pixels sit at cell centres of the [-1, 1]² frame: row i of an H-row grid is
at -1 + (2i + 1)/H, and likewise for columns. Coordinates are (y, x) pairs
and every function accepts any leading batch shape.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.core.errors import ShapeError

# Pixel-space tolerance absorbing rounding in centre coordinates.
_SNAP = 1e-9


@dataclass(frozen=True)
class CoordGrid:
    height: int
    width: int

    @property
    def rows(self) -> np.ndarray:
        return cell_centers(self.height)

    @property
    def cols(self) -> np.ndarray:
        return cell_centers(self.width)

    @property
    def coords(self) -> np.ndarray:
        """H×W×2 array of (y, x) centres."""
        yy, xx = np.meshgrid(self.rows, self.cols, indexing="ij")
        return np.stack([yy, xx], axis=-1)

    def flat_coords(self) -> np.ndarray:
        return self.coords.reshape(-1, 2)


@dataclass(frozen=True)
class Scale:
    s_h: float
    s_w: float

    def __post_init__(self) -> None:
        if not (self.s_h > 0 and self.s_w > 0):
            raise ShapeError(f"scale must be positive, got ({self.s_h}, {self.s_w})")

    def as_array(self) -> np.ndarray:
        return np.array([self.s_h, self.s_w], dtype=np.float64)


@dataclass(frozen=True)
class LocalNeighbors:
    """Neighbour cells per query, enumerated row-major (00, 01, 10, 11 for 2×2)."""

    rows: np.ndarray  # (..., K) int
    cols: np.ndarray  # (..., K) int
    coords: np.ndarray  # (..., K, 2)


def cell_centers(n: int) -> np.ndarray:
    if n < 1:
        raise ShapeError(f"grid dimension must be >= 1, got {n}")
    return -1.0 + (2.0 * np.arange(n) + 1.0) / n


def make_coord_grid(height: int, width: int) -> CoordGrid:
    if height < 1 or width < 1:
        raise ShapeError(f"grid dimensions must be >= 1, got {height}×{width}")
    return CoordGrid(height, width)


def _continuous_index(c: np.ndarray, n: int) -> np.ndarray:
    """Pixel-space position: cell i's centre maps to i."""
    return (c + 1.0) * n / 2.0 - 0.5


def nearest_index(x_q: np.ndarray, grid: CoordGrid) -> Tuple[np.ndarray, np.ndarray]:
    """Nearest cell per query; ties go to the smaller index, out-of-range queries clamp."""
    x_q = np.asarray(x_q, dtype=np.float64)
    i = np.ceil((x_q[..., 0] + 1.0) * grid.height / 2.0 - _SNAP) - 1
    j = np.ceil((x_q[..., 1] + 1.0) * grid.width / 2.0 - _SNAP) - 1
    return (
        np.clip(i, 0, grid.height - 1).astype(np.int64),
        np.clip(j, 0, grid.width - 1).astype(np.int64),
    )


def _coords_of(rows: np.ndarray, cols: np.ndarray, grid: CoordGrid) -> np.ndarray:
    return np.stack([grid.rows[rows], grid.cols[cols]], axis=-1)


def local_neighbors(x_q: np.ndarray, grid: CoordGrid) -> LocalNeighbors:
    """The 2×2 cells surrounding each query; borders clamp, so duplicates are allowed."""
    return local_region(x_q, grid, 2)


def local_region(x_q: np.ndarray, grid: CoordGrid, size: int) -> LocalNeighbors:
    """size×size cells centred on each query.

    Even sizes start from the last centre at or before the query (≤ convention);
    odd sizes are centred on the nearest cell.
    """
    if size < 1:
        raise ShapeError(f"local size must be >= 1, got {size}")
    x_q = np.asarray(x_q, dtype=np.float64)
    if size % 2 == 0:
        i0 = np.floor(_continuous_index(x_q[..., 0], grid.height) + _SNAP) - (size // 2 - 1)
        j0 = np.floor(_continuous_index(x_q[..., 1], grid.width) + _SNAP) - (size // 2 - 1)
    else:
        ni, nj = nearest_index(x_q, grid)
        i0, j0 = ni - size // 2, nj - size // 2
    offsets = np.arange(size)
    di = np.repeat(offsets, size)
    dj = np.tile(offsets, size)
    rows = np.clip(i0[..., None] + di, 0, grid.height - 1).astype(np.int64)
    cols = np.clip(j0[..., None] + dj, 0, grid.width - 1).astype(np.int64)
    return LocalNeighbors(rows=rows, cols=cols, coords=_coords_of(rows, cols, grid))


def area_weights(x_q: np.ndarray, neighbors: LocalNeighbors) -> np.ndarray:
    """Ensemble weights for a 2×2 neighbourhood (…, 4), summing to 1.

    Each neighbour is weighted by the area of the rectangle spanned by the
    query and the diagonally opposite neighbour. Along an axis where both
    neighbours coincide (clamped border) the pair merges onto the first one.
    """
    x_q = np.asarray(x_q, dtype=np.float64)
    c = neighbors.coords
    if c.shape[-2] != 4:
        raise ShapeError("area_weights needs a 2×2 neighbourhood")
    y0, y1 = c[..., 0, 0], c[..., 2, 0]
    x0, x1 = c[..., 0, 1], c[..., 1, 1]
    wy = _axis_weights(x_q[..., 0], y0, y1)
    wx = _axis_weights(x_q[..., 1], x0, x1)
    weights = np.stack(
        [wy[0] * wx[0], wy[0] * wx[1], wy[1] * wx[0], wy[1] * wx[1]], axis=-1
    )
    return weights / weights.sum(axis=-1, keepdims=True)


def _axis_weights(q: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    same = hi == lo
    near = np.where(same, 1.0, np.abs(hi - q))
    far = np.where(same, 0.0, np.abs(q - lo))
    total = near + far
    return near / total, far / total


def scale_vector(h_in: int, w_in: int, h_out: int, w_out: int) -> Scale:
    if h_in <= 0 or w_in <= 0:
        raise ShapeError(f"input size must be positive, got {h_in}×{w_in}")
    if h_out <= 0 or w_out <= 0:
        raise ShapeError(f"output size must be positive, got {h_out}×{w_out}")
    return Scale(h_out / h_in, w_out / w_in)


def rel_offset(x_q: np.ndarray, x_k: np.ndarray, grid: CoordGrid, scaled: bool = True) -> np.ndarray:
    """x_q − x_k, with dy multiplied by grid height and dx by grid width when `scaled`."""
    diff = np.asarray(x_q, dtype=np.float64) - np.asarray(x_k, dtype=np.float64)
    if scaled:
        diff = diff * np.array([grid.height, grid.width], dtype=np.float64)
    return diff
