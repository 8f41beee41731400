"""Points, dissimilarity measures, clustering cost and centroids.

Points are 1-d float64 arrays; a dataset or a center set is a 2-d array with
one point per row. The measure object carries the relaxed-metric constants
(``alpha``, ``beta``) and the sample-size function used by the solver, plus
a vectorised "one center against many points" kernel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import UsageError

__all__ = [
    "MeasureSpec",
    "SQ_EUCLIDEAN",
    "as_point",
    "as_dataset",
    "as_centers",
    "sq_euclidean",
    "cost",
    "centroid",
    "check_centroid_property",
    "check_symmetry_and_triangle",
]


def as_point(p, d: Optional[int] = None) -> np.ndarray:
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1 or arr.size == 0:
        raise UsageError(f"a point must be a non-empty 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise UsageError("point coordinates must be finite")
    if d is not None and arr.shape[0] != d:
        raise UsageError(f"dimension mismatch: expected {d}, got {arr.shape[0]}")
    return arr


def as_dataset(points) -> np.ndarray:
    """Validate and convert to an ``(n, d)`` float64 array.

    A flat sequence of scalars is read as ``n`` one-dimensional points.
    """
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise UsageError(f"dataset must be 2-d (n, d), got shape {arr.shape}")
    n, d = arr.shape
    if n < 1:
        raise UsageError("dataset must contain at least one point")
    if d < 1:
        raise UsageError("points must have dimension >= 1")
    if not np.all(np.isfinite(arr)):
        raise UsageError("dataset contains NaN or infinite coordinates")
    return arr


def as_centers(centers, d: int) -> np.ndarray:
    arr = np.asarray(centers, dtype=np.float64)
    if arr.size == 0:
        return np.empty((0, d))
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1) if d == 1 else arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != d:
        raise UsageError(f"centers must have shape (k, {d}), got {arr.shape}")
    return arr


def sq_euclidean(p, q) -> float:
    p = as_point(p)
    q = as_point(q)
    if p.shape != q.shape:
        raise UsageError(f"dimension mismatch: {p.shape[0]} vs {q.shape[0]}")
    diff = p - q
    return float(np.dot(diff, diff))


def _sq_euclidean_to_center(X: np.ndarray, c: np.ndarray) -> np.ndarray:
    diff = X - c
    return np.einsum("ij,ij->i", diff, diff)


def _sq_euclidean_to_centers(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    diff = X[None, :, :] - C[:, None, :]
    return np.einsum("kij,kij->ki", diff, diff)


def _exact_ceil_inverse_product(gamma: float, delta: float) -> int:
    # Shortest-repr decimals, so f(0.5, 0.2) is exactly 10 rather than 10 + ulp.
    prod = Fraction(repr(float(gamma))) * Fraction(repr(float(delta)))
    return math.ceil(1 / prod)


def kmeans_sample_size(gamma: float, delta: float) -> int:
    """``ceil(1 / (gamma * delta))``, the sample size for squared Euclidean."""
    if not 0 < gamma <= 1:
        raise UsageError(f"gamma must lie in (0, 1], got {gamma}")
    if not 0 < delta < 1:
        raise UsageError(f"delta must lie in (0, 1), got {delta}")
    return _exact_ceil_inverse_product(gamma, delta)


@dataclass(frozen=True)
class MeasureSpec:
    """A dissimilarity measure together with its declared constants.

    ``alpha`` and ``beta`` are declared, not verified; use
    :func:`check_symmetry_and_triangle` to spot-check them on sampled tuples.
    ``to_center`` and ``to_centers`` are optional vectorised kernels; when
    omitted they fall back to looping over ``dissimilarity``.
    """

    name: str
    alpha: float
    beta: float
    dissimilarity: Callable[[np.ndarray, np.ndarray], float]
    sample_size_fn: Callable[[float, float], int]
    to_center: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    to_centers: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if not self.alpha >= 1:
            raise UsageError(f"alpha must be >= 1, got {self.alpha}")
        if not 0 < self.beta <= 1:
            raise UsageError(f"beta must lie in (0, 1], got {self.beta}")

    def point_distances(self, X: np.ndarray, c: np.ndarray) -> np.ndarray:
        """``D(x_i, c)`` for every row ``x_i`` of ``X``."""
        if self.to_center is not None:
            return self.to_center(X, c)
        return np.array([self.dissimilarity(x, c) for x in X], dtype=np.float64)

    def center_distances(self, X: np.ndarray, C: np.ndarray) -> np.ndarray:
        """Matrix of shape ``(len(C), len(X))`` with ``D(x_i, c_j)`` at ``[j, i]``."""
        if self.to_centers is not None:
            return self.to_centers(X, C)
        if len(C) == 0:
            return np.empty((0, len(X)))
        return np.stack([self.point_distances(X, c) for c in C])


SQ_EUCLIDEAN = MeasureSpec(
    name="sq_euclidean",
    alpha=2.0,
    beta=1.0,
    dissimilarity=sq_euclidean,
    sample_size_fn=kmeans_sample_size,
    to_center=_sq_euclidean_to_center,
    to_centers=_sq_euclidean_to_centers,
)


def cost(P, C, measure: MeasureSpec = SQ_EUCLIDEAN) -> float:
    """Sum over points of the dissimilarity to the nearest center."""
    P = as_dataset(P)
    C = as_centers(C, P.shape[1])
    if len(C) == 0:
        raise UsageError("cost requires at least one center")
    best = measure.point_distances(P, C[0])
    for c in C[1:]:
        best = np.minimum(best, measure.point_distances(P, c))
    return float(np.sum(best))


def centroid(points) -> np.ndarray:
    """Coordinate-wise mean; repeated points count with multiplicity."""
    arr = np.asarray(points, dtype=np.float64)
    if arr.size == 0:
        raise UsageError("centroid of an empty multiset is undefined")
    return np.mean(as_dataset(arr), axis=0)


def check_centroid_property(
    P, c, measure: MeasureSpec = SQ_EUCLIDEAN, rel_tol: float = 1e-9
) -> bool:
    """Check ``cost(P, c) == cost(P, mean) + n * D(mean, c)`` up to ``rel_tol``."""
    if rel_tol <= 0:
        raise UsageError("rel_tol must be positive")
    P = as_dataset(P)
    c = as_point(c, P.shape[1])
    mean = centroid(P)
    lhs = cost(P, c[None, :], measure)
    rhs = cost(P, mean[None, :], measure) + len(P) * measure.dissimilarity(mean, c)
    return abs(lhs - rhs) <= rel_tol * max(1.0, lhs)


def check_symmetry_and_triangle(
    pairs: Iterable[Sequence] = (),
    triples: Iterable[Sequence] = (),
    measure: MeasureSpec = SQ_EUCLIDEAN,
) -> bool:
    """Spot-check approximate symmetry on ``pairs`` and the approximate triangle
    inequality on ``triples`` ``(p, q, r)``, i.e. ``D(p,q) <= alpha*(D(p,r)+D(r,q))``.

    Triples also contribute their ``(p, q)`` pair to the symmetry check.
    """
    D = measure.dissimilarity
    alpha, beta = measure.alpha, measure.beta

    def symmetric(p, q) -> bool:
        pq, qp = D(p, q), D(q, p)
        return beta * qp <= pq <= qp / beta

    for p, q in pairs:
        if not symmetric(p, q):
            return False
    for p, q, r in triples:
        if not symmetric(p, q):
            return False
        if D(p, q) > alpha * (D(p, r) + D(r, q)):
            return False
    return True
