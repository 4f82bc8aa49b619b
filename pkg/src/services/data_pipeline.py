"""
Paired-data synthesis: scale sampling, GT cropping, bicubic degradation and
query sampling, plus the dataset sources and the batch loader feeding the
trainer.
"""

from __future__ import annotations

import math
from collections import deque
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Deque, Iterator, List, Optional, Sequence, Union

import numpy as np

from src.core.config import settings
from src.core.errors import DataError
from src.core.logging import get_logger
from src.engine.random import make_rng
from src.schemas.data import DegradationConfig
from src.services.coordinates import Scale, make_coord_grid
from src.services.image_io import FORMATS, load_image
from src.services.resampling import bicubic_resize
from src.services.synthetic import DEFAULT_SIZE, synthetic_images

logger = get_logger(__name__)

SYNTHETIC_PREFIX = "synthetic:"


@dataclass(frozen=True)
class PatchSample:
    lr_patch: np.ndarray  # 3×p×p
    query_coords: np.ndarray  # p²×2, in the GT patch's frame
    gt_rgb: np.ndarray  # p²×3
    scale: Scale


@dataclass(frozen=True)
class Batch:
    lr: np.ndarray  # N×3×p×p
    coords: np.ndarray  # N×Q×2
    gt: np.ndarray  # N×Q×3
    scale: np.ndarray  # N×2


def draw_scale(cfg: DegradationConfig, rng: np.random.Generator) -> float:
    if cfg.scale_choices:
        return float(cfg.scale_choices[int(rng.integers(len(cfg.scale_choices)))])
    return float(rng.uniform(cfg.scale_min, cfg.scale_max))


def augment(patch: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Random horizontal flip, vertical flip and transpose of a C×H×W patch."""
    if rng.random() < 0.5:
        patch = patch[:, :, ::-1]
    if rng.random() < 0.5:
        patch = patch[:, ::-1, :]
    if rng.random() < 0.5:
        patch = patch.transpose(0, 2, 1)
    return np.ascontiguousarray(patch)


def sample_training_pair(hr_image: np.ndarray, cfg: DegradationConfig, rng: np.random.Generator) -> PatchSample:
    p = cfg.patch_lr
    if hr_image.ndim != 3 or hr_image.shape[0] != 3:
        raise DataError(f"expected a 3×H×W image, got shape {hr_image.shape}")
    _, h, w = hr_image.shape
    if h < p or w < p:
        raise DataError(f"image {h}×{w} is smaller than the {p}×{p} LR patch")

    for _ in range(cfg.max_redraws):
        size = int(math.ceil(p * draw_scale(cfg, rng)))
        if size <= h and size <= w:
            top = int(rng.integers(0, h - size + 1))
            left = int(rng.integers(0, w - size + 1))
            break
    else:
        size = min(h, w)
        top, left = (h - size) // 2, (w - size) // 2
        logger.debug("Scale redraws exhausted; centre-cropping", height=h, width=w, size=size)

    gt = hr_image[:, top : top + size, left : left + size]
    if cfg.augment:
        gt = augment(gt, rng)
    lr = bicubic_resize(gt, p, p, cfg.bicubic_a, cfg.antialias)

    picks = rng.choice(size * size, size=p * p, replace=False)
    coords = make_coord_grid(size, size).flat_coords()[picks]
    rgb = gt.reshape(3, -1).T[picks]
    ratio = size / p
    return PatchSample(
        lr_patch=lr.astype(np.float32),
        query_coords=coords,
        gt_rgb=rgb.astype(np.float32),
        scale=Scale(ratio, ratio),
    )


class ImageFolder:
    """PNG/PPM files of a directory in lexicographic order, loaded lazily."""

    def __init__(self, root: Union[str, Path], max_images: int = 0):
        self.root = Path(root)
        if not self.root.is_dir():
            raise DataError(f"dataset directory not found: {self.root}")
        paths = sorted(p for p in self.root.iterdir() if p.suffix.lower() in FORMATS)
        if max_images:
            paths = paths[:max_images]
        if not paths:
            raise DataError(f"no PNG/PPM images in {self.root}")
        self.paths: List[Path] = paths
        self._cache: dict = {}

    def __len__(self) -> int:
        return len(self.paths)

    def __getitem__(self, index: int) -> np.ndarray:
        if index not in self._cache:
            self._cache[index] = load_image(self.paths[index])
        return self._cache[index]

    def name(self, index: int) -> str:
        return self.paths[index].name


class SyntheticImages:
    """In-memory seeded textures, addressed as `synthetic:N` or `synthetic:N:SEED`."""

    def __init__(self, count: int, size: int = DEFAULT_SIZE, seed: int = 0):
        if count < 1:
            raise DataError("synthetic dataset needs at least one image")
        self.images = synthetic_images(count, size, seed)
        self.seed = seed

    def __len__(self) -> int:
        return len(self.images)

    def __getitem__(self, index: int) -> np.ndarray:
        return self.images[index]

    def name(self, index: int) -> str:
        return f"synthetic-{self.seed}-{index:03d}"


Dataset = Union[ImageFolder, SyntheticImages]


def open_dataset(source: str, max_images: int = 0, min_size: int = DEFAULT_SIZE) -> Dataset:
    """A directory path, or the pseudo-directory `synthetic:N[:SEED]`."""
    if source.startswith(SYNTHETIC_PREFIX):
        parts = source[len(SYNTHETIC_PREFIX) :].split(":")
        try:
            count = int(parts[0])
            seed = int(parts[1]) if len(parts) > 1 else 0
        except (ValueError, IndexError):
            raise DataError(f"bad synthetic dataset '{source}', expected synthetic:N or synthetic:N:SEED") from None
        if len(parts) > 2:
            raise DataError(f"bad synthetic dataset '{source}', expected synthetic:N or synthetic:N:SEED")
        if max_images:
            count = min(count, max_images)
        return SyntheticImages(count, size=max(DEFAULT_SIZE, min_size), seed=seed)
    return ImageFolder(source, max_images)


def collate(samples: Sequence[PatchSample]) -> Batch:
    return Batch(
        lr=np.stack([s.lr_patch for s in samples]),
        coords=np.stack([s.query_coords for s in samples]),
        gt=np.stack([s.gt_rgb for s in samples]),
        scale=np.stack([s.scale.as_array() for s in samples]),
    )


class PairedBatchLoader:
    """Deterministic batches: sample `index` of step `step` always uses make_rng(seed, step, index).

    With more than one worker, synthesis runs ahead of the consumer by at most
    `prefetch` batches.
    """

    def __init__(
        self,
        dataset: Dataset,
        cfg: DegradationConfig,
        batch_size: int,
        seed: int,
        workers: Optional[int] = None,
        prefetch: int = 2,
    ):
        if len(dataset) == 0:
            raise DataError("dataset is empty")
        self.dataset = dataset
        self.cfg = cfg
        self.batch_size = batch_size
        self.seed = seed
        self.workers = workers or settings.threads
        self.prefetch = max(1, prefetch)

    def sample(self, step: int, index: int) -> PatchSample:
        rng = make_rng(self.seed, step, index)
        image = self.dataset[int(rng.integers(len(self.dataset)))]
        return sample_training_pair(image, self.cfg, rng)

    def batch(self, step: int) -> Batch:
        return collate([self.sample(step, i) for i in range(self.batch_size)])

    def iterate(self, start: int, stop: int) -> Iterator[Batch]:
        if self.workers <= 1:
            for step in range(start, stop):
                yield self.batch(step)
            return
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            pending: Deque[Future] = deque()
            next_step = start
            while next_step < stop or pending:
                while next_step < stop and len(pending) < self.prefetch:
                    pending.append(pool.submit(self.batch, next_step))
                    next_step += 1
                yield pending.popleft().result()
