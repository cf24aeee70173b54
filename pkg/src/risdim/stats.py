"""Substream derivation, order-preserving parallel map and interval estimates."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

from .errors import DegenerateIntervalError

T = TypeVar("T")
R = TypeVar("R")

Z95 = 1.96


def substream(root_seed: int, *counters: int) -> np.random.Generator:
    """Generator keyed by ``(root_seed, *counters)``; independent of call order."""
    return np.random.default_rng(np.random.SeedSequence([int(root_seed), *map(int, counters)]))


def ordered_map(fn: Callable[[T], R], items: Sequence[T], workers: int = 1) -> list[R]:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def confidence_interval(samples: Iterable[float]) -> tuple[float, float]:
    """Sample mean and 95% normal-approximation half-width."""
    x = np.asarray(list(samples) if not isinstance(samples, np.ndarray) else samples, dtype=float)
    if x.size < 2:
        raise DegenerateIntervalError(f"need at least 2 samples, got {x.size}")
    mean = float(x.mean())
    if np.all(x == x[0]):
        return mean, 0.0
    return mean, Z95 * float(x.std(ddof=1)) / math.sqrt(x.size)
