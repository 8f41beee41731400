"""Exact k-means on tiny inputs by enumerating set partitions.

Partitions are generated as restricted-growth strings, so each one appears
exactly once. For squared Euclidean distance the best single center of a
block is its mean, so scoring a partition needs no search over centers.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import islice
from typing import Iterator

import numpy as np

from .errors import RefusalError, UsageError
from .measure import as_dataset

MAX_POINTS = 15
_CHUNK = 8192


@dataclass(frozen=True)
class Partition:
    labels: tuple
    k_used: int

    def blocks(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.k_used)]
        for i, lab in enumerate(self.labels):
            out[lab].append(i)
        return out


def _check_size(n: int, k: int) -> None:
    if n > MAX_POINTS:
        raise RefusalError(f"exact oracle is capped at n <= {MAX_POINTS} points, got n={n}")
    if not 1 <= k <= n:
        raise UsageError(f"need 1 <= k <= n, got k={k}, n={n}")


def _label_strings(n: int, k: int) -> Iterator[tuple]:
    labels = [0] * n
    # running max label over labels[:i+1]
    maxes = [0] * n

    def rec(i: int):
        if i == n:
            yield tuple(labels)
            return
        top = maxes[i - 1]
        for lab in range(min(top + 2, k)):
            labels[i] = lab
            maxes[i] = max(top, lab)
            yield from rec(i + 1)

    yield from rec(1)


def enumerate_partitions(n: int, k: int) -> Iterator[Partition]:
    """Every partition of ``range(n)`` into at most ``k`` non-empty blocks.

    Yielded once each, in lexicographic order of the restricted-growth label
    strings (``(0, 0, 0)`` first).
    """
    _check_size(n, k)
    for labels in _label_strings(n, k):
        yield Partition(labels=labels, k_used=max(labels) + 1)


def _score_chunk(P: np.ndarray, k: int, labels: np.ndarray) -> np.ndarray:
    onehot = labels[:, :, None] == np.arange(k)[None, None, :]
    counts = onehot.sum(axis=1)
    sums = np.einsum("bnk,nd->bkd", onehot.astype(np.float64), P)
    means = sums / np.maximum(counts, 1)[:, :, None]
    assigned = np.take_along_axis(means, labels[:, :, None], axis=1)
    diff = P[None, :, :] - assigned
    return np.einsum("bnd,bnd->b", diff, diff)


def optimal_kmeans(P, k: int, threads: int = 1) -> tuple[Partition, np.ndarray, float]:
    """Exact optimum: ``(partition, block centroids, cost)``.

    Squared Euclidean only. The first minimum in enumeration order wins.
    Raises :class:`RefusalError` beyond ``MAX_POINTS`` points.
    """
    P = as_dataset(P)
    n = P.shape[0]
    _check_size(n, k)

    def chunks():
        it = _label_strings(n, k)
        while batch := list(islice(it, _CHUNK)):
            yield np.array(batch, dtype=np.intp)

    def score(labels):
        costs = _score_chunk(P, k, labels)
        j = int(np.argmin(costs))
        return costs[j], labels[j]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(score, chunks()))
    else:
        results = [score(c) for c in chunks()]

    best_cost, best_labels = np.inf, None
    for c, lab in results:
        if c < best_cost:
            best_cost, best_labels = float(c), lab
    part = Partition(labels=tuple(int(x) for x in best_labels), k_used=int(best_labels.max()) + 1)
    centers = np.array([P[block].mean(axis=0) for block in part.blocks()])
    return part, centers, best_cost
