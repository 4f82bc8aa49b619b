"""
Seeded, splittable random streams and weight initialisers.

Streams are Philox (counter-based) generators keyed by a seed plus any number
of integer sub-keys, so (seed, step, index) always maps to the same stream no
matter which worker draws from it.
"""

from __future__ import annotations

import math
from typing import Tuple

import numpy as np


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    entropy = [int(seed)] + [int(k) for k in keys]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def he_uniform(shape: Tuple[int, ...], fan_in: int, rng: np.random.Generator, dtype=np.float32) -> np.ndarray:
    bound = math.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


def bias_uniform(size: int, fan_in: int, rng: np.random.Generator, dtype=np.float32) -> np.ndarray:
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=(size,)).astype(dtype)
