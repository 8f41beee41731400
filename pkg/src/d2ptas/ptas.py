"""Sampling-based PTAS for k-means (and k-median under relaxed metrics).

Each level of the recursion draws a multiset of ``N`` points by D^2-sampling
with respect to the centers chosen so far, then branches on the centroid of
every ``M``-subset of that multiset. A full run repeats the recursion
``repetitions`` times from independent seeds and keeps the cheapest leaf.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Optional

import numpy as np

from .errors import RefusalError, UsageError
from .measure import SQ_EUCLIDEAN, MeasureSpec, as_dataset, cost
from .sampler import DistanceCache, Rng, derive_rng, draw_multiset

THEORETICAL = "theoretical"
PRACTICAL = "practical"
DEFAULT_LEAF_BUDGET = 10**8
# failure probability fed to the sample-size function inside the algorithm
INNER_DELTA = 0.2


@dataclass(frozen=True)
class TheoreticalParams:
    eta: float
    N: int
    M: int
    kappa_log2: float


@dataclass(frozen=True)
class PtasParams:
    N: int
    M: int
    repetitions: int
    mode: str = PRACTICAL
    master_seed: int = 0
    epsilon: float = 1.0

    def __post_init__(self):
        if self.N < 1 or self.M < 1:
            raise UsageError(f"N and M must be positive, got N={self.N}, M={self.M}")
        if self.M > self.N:
            raise UsageError(f"subset size M={self.M} exceeds sample width N={self.N}")
        if self.repetitions < 1:
            raise UsageError("repetitions must be >= 1")
        if self.mode not in (THEORETICAL, PRACTICAL):
            raise UsageError(f"unknown mode {self.mode!r}")
        if not 0 < self.epsilon <= 1:
            raise UsageError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if not 0 <= self.master_seed < 2**64:
            raise UsageError("master_seed must be an unsigned 64-bit integer")

    @property
    def kappa(self) -> int:
        return math.comb(self.N, self.M)

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "M": self.M,
            "repetitions": self.repetitions,
            "mode": self.mode,
            "master_seed": self.master_seed,
            "epsilon": self.epsilon,
        }


@dataclass
class SolveResult:
    centers: np.ndarray
    cost: float
    candidates_evaluated: int
    elapsed: float
    seed: int
    params: PtasParams


def _log2_comb(N: int, M: int) -> float:
    if N <= 10_000:
        return math.log2(math.comb(N, M))
    return (math.lgamma(N + 1) - math.lgamma(M + 1) - math.lgamma(N - M + 1)) / math.log(2)


def theoretical_params(k: int, epsilon: float, measure: MeasureSpec = SQ_EUCLIDEAN) -> TheoreticalParams:
    """Sample width and subset size from the algorithm's own constants.

    ``eta = 2 alpha^2 / beta^2 * (1 + 1/beta)``,
    ``M = f(epsilon / (2 eta), 0.2)`` and
    ``N = ceil(64 alpha eta k / (beta epsilon^2) * M)``. The branching factor
    ``binomial(N, M)`` is astronomically large, so only its log2 is returned.
    """
    if k < 1:
        raise UsageError("k must be >= 1")
    if not 0 < epsilon <= 1:
        raise UsageError(f"epsilon must lie in (0, 1], got {epsilon}")
    alpha = Fraction(repr(float(measure.alpha)))
    beta = Fraction(repr(float(measure.beta)))
    eps = Fraction(repr(float(epsilon)))
    eta = 2 * alpha**2 / beta**2 * (1 + 1 / beta)
    M = int(measure.sample_size_fn(float(eps / (2 * eta)), INNER_DELTA))
    N = math.ceil(64 * alpha * eta * k / (beta * eps**2) * M)
    return TheoreticalParams(eta=float(eta), N=N, M=M, kappa_log2=_log2_comb(N, M))


def practical_params(
    k: int,
    epsilon: float = 1.0,
    N: Optional[int] = None,
    M: Optional[int] = None,
    repetitions: Optional[int] = None,
    master_seed: int = 0,
) -> PtasParams:
    """Executable defaults: ``N = max(4, ceil(8k/epsilon))``, ``M = 2``, ``2^k`` restarts."""
    if k < 1:
        raise UsageError("k must be >= 1")
    if not 0 < epsilon <= 1:
        raise UsageError(f"epsilon must lie in (0, 1], got {epsilon}")
    if N is None:
        N = max(4, math.ceil(8 * k / epsilon))
    if M is None:
        M = min(2, N)
    if repetitions is None:
        repetitions = 2**k
    return PtasParams(N=N, M=M, repetitions=repetitions, mode=PRACTICAL,
                      master_seed=master_seed, epsilon=epsilon)


def theoretical_ptas_params(
    k: int,
    epsilon: float,
    measure: MeasureSpec = SQ_EUCLIDEAN,
    repetitions: Optional[int] = None,
    master_seed: int = 0,
) -> PtasParams:
    tp = theoretical_params(k, epsilon, measure)
    return PtasParams(N=tp.N, M=tp.M, repetitions=2**k if repetitions is None else repetitions,
                      mode=THEORETICAL, master_seed=master_seed, epsilon=epsilon)


def leaf_estimate_log2(N: int, M: int, k: int) -> float:
    """log2 of ``binomial(N, M) ** k``, the leaves visited by one restart."""
    return k * _log2_comb(N, M)


def within_leaf_budget(N: int, M: int, k: int, budget: int) -> bool:
    est = leaf_estimate_log2(N, M, k)
    if est > math.log2(max(budget, 1)) + 1:
        return False
    return math.comb(N, M) ** k <= budget


def subset_by_rank(N: int, M: int, rank: int) -> tuple[int, ...]:
    """The ``rank``-th ``M``-subset of ``range(N)`` in lexicographic order."""
    if not 0 <= M <= N:
        raise UsageError(f"need 0 <= M <= N, got N={N}, M={M}")
    total = math.comb(N, M)
    if not 0 <= rank < total:
        raise UsageError(f"rank {rank} outside [0, {total})")
    out = []
    x = 0
    for remaining in range(M, 0, -1):
        # skip every subset whose next element is x
        while rank >= (block := math.comb(N - x - 1, remaining - 1)):
            rank -= block
            x += 1
        out.append(x)
        x += 1
    return tuple(out)


def rank_of_subset(N: int, subset) -> int:
    """Inverse of :func:`subset_by_rank`."""
    subset = sorted(subset)
    M = len(subset)
    rank = 0
    prev = -1
    for pos, s in enumerate(subset):
        if not prev < s < N:
            raise UsageError(f"invalid subset {subset} of range({N})")
        remaining = M - pos
        for x in range(prev + 1, s):
            rank += math.comb(N - x - 1, remaining - 1)
        prev = s
    return rank


@dataclass
class BestLeaf:
    """Streaming minimum over evaluated leaves (first minimum wins)."""

    cost: float = math.inf
    centers: Optional[np.ndarray] = None
    leaf_index: int = -1
    leaves: int = 0
    record: Optional[list] = field(default=None, repr=False)

    def offer(self, costs: np.ndarray, make_centers) -> None:
        j = int(np.argmin(costs))
        if costs[j] < self.cost:
            self.cost = float(costs[j])
            self.centers = make_centers(j)
            self.leaf_index = self.leaves + j
        if self.record is not None:
            self.record.extend(float(c) for c in costs)
        self.leaves += len(costs)


def sample_centers(
    k: int,
    i: int,
    centers: list,
    cache: DistanceCache,
    params: PtasParams,
    rng: Rng,
    best: BestLeaf,
) -> None:
    """One node of the recursion at depth ``i`` with ``centers`` chosen so far.

    ``cache`` must hold exactly the distances for ``centers``; it is restored
    to that state on return.
    """
    if len(centers) != i or cache.depth != i:
        raise UsageError("center list, cache depth and recursion depth disagree")
    if i == k:
        best.offer(np.array([cache.total]), lambda _: np.array(centers))
        return

    P = cache.P
    S = draw_multiset(cache, params.N, rng)
    subsets = np.array(list(combinations(range(params.N), params.M)), dtype=np.intp)
    candidates = P[S[subsets]].mean(axis=1)
    dists = cache.measure.center_distances(P, candidates)

    if i == k - 1:
        # last level: all children are leaves, evaluate them in one pass
        top = cache.min_dist
        leaf_dists = dists if top is None else np.minimum(top[None, :], dists)
        costs = leaf_dists.sum(axis=1)
        best.offer(costs, lambda j: np.vstack([*centers, candidates[j]]) if centers
                   else candidates[j][None, :].copy())
        return

    for j in range(len(candidates)):
        cache.push_distances(dists[j])
        centers.append(candidates[j])
        sample_centers(k, i + 1, centers, cache, params, rng, best)
        centers.pop()
        cache.pop_center()


def _distinct_rows(P: np.ndarray) -> np.ndarray:
    _, first = np.unique(P, axis=0, return_index=True)
    return P[np.sort(first)]


def _run_restart(P, k, params, measure, r, record):
    cache = DistanceCache(P, measure)
    best = BestLeaf(record=record)
    sample_centers(k, 0, [], cache, params, derive_rng(params.master_seed, r), best)
    assert cache.depth == 0
    return best


def find_k_means(
    P,
    k: int,
    params: PtasParams,
    measure: MeasureSpec = SQ_EUCLIDEAN,
    leaf_budget: int = DEFAULT_LEAF_BUDGET,
    threads: int = 1,
    leaf_record: Optional[list] = None,
) -> SolveResult:
    """Run ``params.repetitions`` independent restarts and keep the cheapest leaf.

    Restart ``r`` draws from the stream ``(master_seed, r)``, so results are
    identical for any ``threads`` value and a run with more repetitions
    extends, rather than replaces, the search of a shorter one. Ties are
    broken by restart index, then by traversal order.

    Raises :class:`RefusalError` when ``binomial(N, M) ** k`` exceeds
    ``leaf_budget``.
    """
    start = time.perf_counter()
    P = as_dataset(P)
    if k < 1:
        raise UsageError("k must be >= 1")
    n = P.shape[0]
    if n <= k:
        centers = _distinct_rows(P)
        return SolveResult(centers=centers, cost=0.0, candidates_evaluated=0,
                           elapsed=time.perf_counter() - start,
                           seed=params.master_seed, params=params)
    if not within_leaf_budget(params.N, params.M, k, leaf_budget):
        raise RefusalError(
            f"leaf estimate binomial({params.N},{params.M})^{k} = "
            f"2^{leaf_estimate_log2(params.N, params.M, k):.1f} exceeds budget {leaf_budget}"
        )

    reps = range(params.repetitions)
    if threads > 1 and leaf_record is None:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            bests = list(pool.map(lambda r: _run_restart(P, k, params, measure, r, None), reps))
    else:
        bests = [_run_restart(P, k, params, measure, r, leaf_record) for r in reps]

    winner = min(range(len(bests)), key=lambda r: (bests[r].cost, r, bests[r].leaf_index))
    best = bests[winner]
    return SolveResult(
        centers=best.centers,
        cost=best.cost,
        candidates_evaluated=sum(b.leaves for b in bests),
        elapsed=time.perf_counter() - start,
        seed=params.master_seed,
        params=params,
    )


def solution_cost(P, result: SolveResult, measure: MeasureSpec = SQ_EUCLIDEAN) -> float:
    """Cost of ``result.centers`` recomputed from scratch."""
    return cost(P, result.centers, measure)
