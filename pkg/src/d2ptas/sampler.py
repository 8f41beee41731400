"""D^2-sampling against a growing center set.

:class:`DistanceCache` keeps one array of per-point minimum dissimilarities
per pushed center, so backtracking in the PTAS recursion restores the exact
previous state without recomputation.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from .errors import UsageError
from .measure import SQ_EUCLIDEAN, MeasureSpec, as_dataset, as_point

Rng = np.random.Generator


def derive_rng(master_seed: int, *keys: int) -> Rng:
    """Independent PCG64 stream for ``(master_seed, *keys)``.

    The mixing is numpy's ``SeedSequence`` hash, so the stream for restart
    ``r`` does not depend on how many other restarts exist or in what order
    they run.
    """
    if master_seed < 0:
        raise UsageError("seeds must be non-negative")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([master_seed, *keys])))


def derive_seed(master_seed: int, *keys: int) -> int:
    """A 64-bit integer seed derived from ``(master_seed, *keys)``."""
    word = np.random.SeedSequence([master_seed, *keys]).generate_state(1, dtype=np.uint64)[0]
    return int(word)


class DistanceCache:
    """Stack of per-point minimum dissimilarities, one level per center."""

    def __init__(self, P, measure: MeasureSpec = SQ_EUCLIDEAN):
        self.P = as_dataset(P)
        self.measure = measure
        self._levels: list[np.ndarray] = []
        self._totals: list[float] = []

    @property
    def depth(self) -> int:
        return len(self._levels)

    @property
    def n(self) -> int:
        return self.P.shape[0]

    @property
    def min_dist(self) -> Optional[np.ndarray]:
        """Top-level array, or ``None`` while no center has been pushed."""
        return self._levels[-1] if self._levels else None

    @property
    def total(self) -> Optional[float]:
        return self._totals[-1] if self._totals else None

    def push_center(self, c) -> None:
        c = as_point(c, self.P.shape[1])
        self.push_distances(self.measure.point_distances(self.P, c))

    def push_distances(self, dist: np.ndarray) -> None:
        """Push a center given its precomputed distances to every point."""
        if self._levels:
            dist = np.minimum(self._levels[-1], dist)
        self._levels.append(dist)
        self._totals.append(float(np.sum(dist)))

    def pop_center(self) -> None:
        if not self._levels:
            raise UsageError("pop_center on an empty distance cache")
        self._levels.pop()
        self._totals.pop()


def uniform_draw(n: int, rng: Rng) -> int:
    if n < 1:
        raise UsageError("cannot draw from an empty dataset")
    return int(rng.integers(n))


def _inverse_cdf(weights: np.ndarray, u: np.ndarray) -> np.ndarray:
    cum = np.cumsum(weights)
    idx = np.searchsorted(cum, u * cum[-1], side="right")
    # u * total can round up to total; land on the last positive-weight index.
    last = int(np.flatnonzero(weights)[-1])
    return np.minimum(idx, last)


def d2_draw(cache: DistanceCache, rng: Rng) -> int:
    """Draw one index with probability ``min_dist[i] / total``.

    Falls back to a uniform draw when every point sits on a center.
    """
    if cache.depth == 0:
        raise UsageError("d2_draw needs at least one center; use uniform_draw")
    if not cache.total > 0:
        return uniform_draw(cache.n, rng)
    return int(_inverse_cdf(cache.min_dist, np.array([rng.random()]))[0])


def draw_multiset(cache: DistanceCache, N: int, rng: Rng) -> np.ndarray:
    """``N`` independent draws, in order, duplicates kept.

    Draws are uniform while the cache is empty and D^2-weighted afterwards.
    """
    if N < 0:
        raise UsageError("sample size must be non-negative")
    if N == 0:
        return np.empty(0, dtype=np.intp)
    if cache.depth == 0 or not cache.total > 0:
        return rng.integers(cache.n, size=N).astype(np.intp)
    return _inverse_cdf(cache.min_dist, rng.random(N)).astype(np.intp)
