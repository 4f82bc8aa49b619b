"""
Local-ensemble heads and the renderers that query them on an output grid.

For a query coordinate x_q the head looks at the LR cells in a local region
around it. `CiaoSRHead` weights those cells with a softmax over query/key
dot products (or, as an ablation, over an MLP of the offsets) and decodes
the weighted value vector to RGB. `LIIFHead` is the area-weighted baseline.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from src.core.config import settings
from src.core.errors import ShapeError
from src.engine import functional as F
from src.engine.tensor import Tensor, is_grad_enabled, no_grad
from src.models.base import Module
from src.models.layers import MLP
from src.schemas.model import HeadConfig
from src.services.coordinates import (
    area_weights,
    local_region,
    make_coord_grid,
    nearest_index,
    rel_offset,
)

UNFOLD = 3


@dataclass(frozen=True)
class QueryBatch:
    """Query coordinates (N×Q×2, in [-1, 1]) and the per-image target scale (N×2)."""

    coords: np.ndarray
    scale: np.ndarray

    def __post_init__(self) -> None:
        if self.coords.ndim != 3 or self.coords.shape[-1] != 2 or self.coords.shape[1] == 0:
            raise ShapeError(f"query coords must be a non-empty N×Q×2 array, got {self.coords.shape}")
        if self.scale.shape != (self.coords.shape[0], 2):
            raise ShapeError(f"scale must be N×2, got {self.scale.shape}")


@dataclass(frozen=True)
class NeighborhoodPlan:
    """Flat token indices (into the N·H·W token table) and scaled offsets per query."""

    nearest: np.ndarray  # N×Q
    neighbors: np.ndarray  # N×Q×K
    rel: np.ndarray  # N×Q×K×2


def plan_neighborhood(coords: np.ndarray, h: int, w: int, local_size: int, scaled: bool = True) -> NeighborhoodPlan:
    grid = make_coord_grid(h, w)
    ni, nj = nearest_index(coords, grid)
    region = local_region(coords, grid, local_size)
    base = (np.arange(coords.shape[0], dtype=np.int64) * (h * w))[:, None]
    return NeighborhoodPlan(
        nearest=ni * w + nj + base,
        neighbors=region.rows * w + region.cols + base[..., None],
        rel=rel_offset(coords[..., None, :], region.coords, grid, scaled),
    )


def _token_table(feat: Tensor) -> Tensor:
    """N×C×H×W → (N·H·W)×C."""
    n, c, h, w = feat.shape
    return F.reshape(F.flatten_spatial(feat), (n * h * w, c))


def _const(array: np.ndarray, like: Tensor) -> Tensor:
    return Tensor(np.ascontiguousarray(array), dtype=like.dtype)


def _scale_tokens(scale: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Broadcast N×2 scales to shape[:-1]×2."""
    expand = scale.reshape(scale.shape[0], *([1] * (len(shape) - 2)), 2)
    return np.broadcast_to(expand, shape)


class CiaoSRHead(Module):
    """φ_k, φ_v, φ_q (and the weight MLP for the ablation ensemble).

    `ensemble="attention"` scores neighbours by Qᵀ K_i; `ensemble="mlp"`
    scores them with an MLP over [r_k, s] only.
    """

    def __init__(
        self,
        feat_channels: int,
        g_channels: int,
        cfg: HeadConfig,
        rng: np.random.Generator,
        ensemble: str = "attention",
    ):
        if ensemble not in ("attention", "mlp"):
            raise ShapeError(f"unknown ensemble '{ensemble}'")
        self.cfg = cfg
        self.ensemble = ensemble
        self.feat_channels = feat_channels
        self.g_channels = g_channels
        unfolded = feat_channels * UNFOLD * UNFOLD
        self.key_dim = unfolded if cfg.unfold_query else feat_channels
        if ensemble == "attention":
            self.phi_k = MLP(unfolded + 4, cfg.kv_hidden, self.key_dim, rng)
        else:
            self.weight_net = MLP(4, cfg.weight_hidden, 1, rng)
        self.phi_v = MLP(unfolded + g_channels + 4, cfg.kv_hidden, cfg.value_dim, rng)
        self.phi_q = MLP(cfg.value_dim, cfg.query_hidden, 3, rng)

    @property
    def local_count(self) -> int:
        return self.cfg.local_size * self.cfg.local_size

    def forward(self, feat: Tensor, g: Optional[Tensor], queries: QueryBatch) -> Tensor:
        return self.attend(feat, g, queries)[0]

    def attend(self, feat: Tensor, g: Optional[Tensor], queries: QueryBatch) -> Tuple[Tensor, Tensor]:
        """RGB per query (N×Q×3) and the ensemble weights (N×Q×K)."""
        n, c, h, w = feat.shape
        if c != self.feat_channels:
            raise ShapeError(f"head expects {self.feat_channels} feature channels, got {c}")
        if g is None:
            g = Tensor(np.zeros((n, self.g_channels, h, w)), dtype=feat.dtype)
        if g.shape != (n, self.g_channels, h, w):
            raise ShapeError(f"G must be {(n, self.g_channels, h, w)}, got {g.shape}")

        plan = plan_neighborhood(queries.coords, h, w, self.cfg.local_size, self.cfg.scale_offsets)
        unf = _token_table(F.unfold(feat, UNFOLD))
        f_i = F.take(unf, plan.neighbors, axis=0)  # N×Q×K×9C
        g_i = F.take(_token_table(g), plan.neighbors, axis=0)  # N×Q×K×Cg
        rel = _const(plan.rel, feat)
        s = _const(_scale_tokens(queries.scale, plan.rel.shape), feat)

        if self.ensemble == "attention":
            table = unf if self.cfg.unfold_query else _token_table(feat)
            q = F.take(table, plan.nearest, axis=0)  # N×Q×D
            keys = self.phi_k(F.concat([f_i, rel, s], axis=-1))  # N×Q×K×D
            q = F.reshape(q, (q.shape[0], q.shape[1], 1, q.shape[2]))
            logits = F.sum(q * keys, axis=-1)
            if self.cfg.scale_logits:
                logits = logits * (1.0 / math.sqrt(self.key_dim))
        else:
            logits = F.sum(self.weight_net(F.concat([rel, s], axis=-1)), axis=-1)
        weights = F.softmax(logits, axis=-1)

        values = self.phi_v(F.concat([f_i, g_i, rel, s], axis=-1))  # N×Q×K×Dv
        wn = F.reshape(weights, (*weights.shape, 1))
        mixed = F.sum(wn * values, axis=2)
        return self.phi_q(mixed), weights


class LIIFHead(Module):
    """f([z_i, r_i, s]) ensembled with area weights over the 2×2 neighbourhood."""

    def __init__(self, feat_channels: int, cfg: HeadConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.feat_channels = feat_channels
        self.f = MLP(feat_channels * UNFOLD * UNFOLD + 4, cfg.baseline_hidden, 3, rng)

    def forward(self, feat: Tensor, g: Optional[Tensor], queries: QueryBatch) -> Tensor:
        return self.attend(feat, g, queries)[0]

    def attend(self, feat: Tensor, g: Optional[Tensor], queries: QueryBatch) -> Tuple[Tensor, Tensor]:
        n, c, h, w = feat.shape
        if c != self.feat_channels:
            raise ShapeError(f"head expects {self.feat_channels} feature channels, got {c}")
        grid = make_coord_grid(h, w)
        region = local_region(queries.coords, grid, 2)
        plan = plan_neighborhood(queries.coords, h, w, 2, self.cfg.scale_offsets)
        weights = _const(area_weights(queries.coords, region), feat)  # N×Q×4

        unf = _token_table(F.unfold(feat, UNFOLD))
        f_i = F.take(unf, plan.neighbors, axis=0)
        rel = _const(plan.rel, feat)
        s = _const(_scale_tokens(queries.scale, plan.rel.shape), feat)
        preds = self.f(F.concat([f_i, rel, s], axis=-1))  # N×Q×4×3
        wn = F.reshape(weights, (*weights.shape, 1))
        return F.sum(wn * preds, axis=2), weights


QueryFn = Callable[[QueryBatch], Tensor]


def grid_queries(n: int, h: int, w: int, h_out: int, w_out: int) -> Tuple[np.ndarray, np.ndarray]:
    """Cell centres of the output grid (H_out·W_out×2) and the N×2 scale."""
    if h_out < 1 or w_out < 1:
        raise ShapeError(f"output size must be >= 1, got {h_out}×{w_out}")
    coords = make_coord_grid(h_out, w_out).flat_coords()
    scale = np.tile(np.array([[h_out / h, w_out / w]], dtype=np.float64), (n, 1))
    return coords, scale


def _render_grid(query: QueryFn, n: int, h: int, w: int, h_out: int, w_out: int, chunk_size: Optional[int]) -> Tensor:
    coords, scale = grid_queries(n, h, w, h_out, w_out)
    chunk = chunk_size or settings.query_chunk
    bounds = [(start, min(start + chunk, len(coords))) for start in range(0, len(coords), chunk)]

    def run(bound: Tuple[int, int]) -> Tensor:
        part = np.broadcast_to(coords[bound[0] : bound[1]], (n, bound[1] - bound[0], 2))
        return query(QueryBatch(np.ascontiguousarray(part), scale))

    if is_grad_enabled():
        pieces = [run(b) for b in bounds]
        rgb = F.concat(pieces, axis=1)
    else:

        def run_detached(bound: Tuple[int, int]) -> np.ndarray:
            with no_grad():
                return run(bound).data

        if settings.threads > 1 and len(bounds) > 1:
            with ThreadPoolExecutor(max_workers=settings.threads) as pool:
                arrays: List[np.ndarray] = list(pool.map(run_detached, bounds))
        else:
            arrays = [run_detached(b) for b in bounds]
        rgb = Tensor(np.concatenate(arrays, axis=1))
    return F.transpose(F.reshape(rgb, (n, h_out, w_out, 3)), (0, 3, 1, 2))


def render(
    feat: Tensor,
    g: Optional[Tensor],
    h_out: int,
    w_out: int,
    head: CiaoSRHead,
    chunk_size: Optional[int] = None,
) -> Tensor:
    """SR image N×3×H_out×W_out from attention-weighted local ensembles."""
    n, _, h, w = feat.shape
    return _render_grid(lambda qb: head(feat, g, qb), n, h, w, h_out, w_out, chunk_size)


def render_liif_baseline(
    feat: Tensor,
    h_out: int,
    w_out: int,
    f_head: LIIFHead,
    chunk_size: Optional[int] = None,
) -> Tensor:
    """SR image from the area-weighted (bilinear-equivalent) ensemble."""
    n, _, h, w = feat.shape
    return _render_grid(lambda qb: f_head(feat, None, qb), n, h, w, h_out, w_out, chunk_size)


def render_mlp_weight_ablation(
    feat: Tensor,
    h_out: int,
    w_out: int,
    params: CiaoSRHead,
    g: Optional[Tensor] = None,
    chunk_size: Optional[int] = None,
) -> Tensor:
    """SR image whose ensemble weights come from an MLP over [r_k, s]."""
    if params.ensemble != "mlp":
        raise ShapeError("render_mlp_weight_ablation needs a head built with ensemble='mlp'")
    n, _, h, w = feat.shape
    return _render_grid(lambda qb: params(feat, g, qb), n, h, w, h_out, w_out, chunk_size)
