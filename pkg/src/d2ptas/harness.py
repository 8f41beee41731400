"""Baselines and statistical experiments.

k-means++ seeding and Lloyd refinement serve as a reference heuristic;
:func:`ratio_experiment` measures PTAS cost against the exact oracle and
:func:`sampling_property_test` checks the uniform-sample mean guarantee for
squared Euclidean distance.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import UsageError
from .measure import SQ_EUCLIDEAN, as_centers, as_dataset, centroid, cost, kmeans_sample_size
from .oracle import MAX_POINTS, optimal_kmeans
from .ptas import find_k_means, practical_params
from .sampler import DistanceCache, Rng, d2_draw, derive_rng, derive_seed, uniform_draw

GENERATORS = ("uniform_box", "gaussian_mixture", "collinear")

# stream tags for derive_rng / derive_seed
_INSTANCE, _PTAS, _BASELINE = 1, 2, 3
_ROUNDING_SLACK = 1e-9


def kmeanspp_seed(P, k: int, rng: Rng) -> np.ndarray:
    """k-means++: first center uniform, then one D^2-sampled point per step."""
    P = as_dataset(P)
    if not 1 <= k <= len(P):
        raise UsageError(f"need 1 <= k <= n, got k={k}, n={len(P)}")
    cache = DistanceCache(P, SQ_EUCLIDEAN)
    chosen = [uniform_draw(len(P), rng)]
    cache.push_center(P[chosen[0]])
    while len(chosen) < k:
        idx = d2_draw(cache, rng)
        chosen.append(idx)
        cache.push_center(P[idx])
    return P[chosen].copy()


def lloyd_refine(P, C, max_iters: int = 100, trace: Optional[list] = None) -> np.ndarray:
    """Lloyd iterations until the assignment stops changing or ``max_iters``.

    Empty clusters keep their previous center. If ``trace`` is given, the
    cost before the first iteration and after each one is appended to it.
    """
    P = as_dataset(P)
    C = as_centers(C, P.shape[1]).copy()
    if len(C) == 0:
        raise UsageError("lloyd_refine needs at least one center")
    if trace is not None:
        trace.append(cost(P, C))
    labels = None
    for _ in range(max_iters):
        new_labels = np.argmin(SQ_EUCLIDEAN.center_distances(P, C), axis=0)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(len(C)):
            members = P[labels == j]
            if len(members):
                C[j] = members.mean(axis=0)
        if trace is not None:
            trace.append(cost(P, C))
    return C


def generate_instance(generator: str, n: int, d: int, k: int, rng: Rng) -> np.ndarray:
    """Seeded synthetic datasets.

    ``gaussian_mixture`` puts unit-variance components at the vertices
    ``0, 10 e_1, ..., 10 e_d`` of a scaled simplex (extra components beyond
    ``d + 1`` continue along the first axis) and assigns points round-robin.
    """
    if n < 1 or d < 1:
        raise UsageError("n and d must be positive")
    if generator == "uniform_box":
        return rng.uniform(0.0, 1.0, size=(n, d))
    if generator == "gaussian_mixture":
        scale = 10.0
        means = np.zeros((max(k, 1), d))
        for j in range(1, len(means)):
            if j <= d:
                means[j, j - 1] = scale
            else:
                means[j, 0] = -scale * (j - d)
        labels = np.arange(n) % len(means)
        return means[labels] + rng.standard_normal((n, d))
    if generator == "collinear":
        direction = rng.standard_normal(d)
        direction /= np.linalg.norm(direction) or 1.0
        t = rng.uniform(0.0, 10.0, size=n)
        return t[:, None] * direction[None, :]
    raise UsageError(f"unknown generator {generator!r}; choose from {', '.join(GENERATORS)}")


@dataclass
class ExperimentConfig:
    generator: str = "uniform_box"
    n: int = 10
    d: int = 2
    k: int = 2
    epsilon: float = 0.5
    trials: int = 50
    N: Optional[int] = None
    M: Optional[int] = None
    repetitions: Optional[int] = None
    master_seed: int = 0
    dataset: Optional[np.ndarray] = None  # fixed instance reused by every trial
    threads: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise UsageError("trials must be >= 1")
        if self.dataset is None and self.generator not in GENERATORS:
            raise UsageError(f"unknown generator {self.generator!r}")


@dataclass
class TrialResult:
    ptas_cost: float
    oracle_cost: float
    ratio: float
    baseline_cost: float


@dataclass
class RatioReport:
    trials: list[TrialResult]
    epsilon: float
    runtime_s: float = field(default=0.0, compare=False)

    @property
    def ratios(self) -> np.ndarray:
        return np.array([t.ratio for t in self.trials])

    @property
    def mean_ratio(self) -> float:
        return float(np.mean(self.ratios))

    @property
    def max_ratio(self) -> float:
        return float(np.max(self.ratios))

    def fraction_within(self, bound: Optional[float] = None) -> float:
        bound = 1 + self.epsilon if bound is None else bound
        return float(np.mean(self.ratios <= bound))

    def summary(self) -> dict:
        return {
            "trials": len(self.trials),
            "mean_ratio": self.mean_ratio,
            "max_ratio": self.max_ratio,
            "fraction_within_1_plus_eps": self.fraction_within(),
        }


def approximation_ratio(found: float, optimum: float) -> float:
    if optimum == 0:
        return 1.0 if found == 0 else math.inf
    return found / optimum


def _run_trial(config: ExperimentConfig, t: int) -> TrialResult:
    if config.dataset is not None:
        P = as_dataset(config.dataset)
    else:
        P = generate_instance(config.generator, config.n, config.d, config.k,
                              derive_rng(config.master_seed, _INSTANCE, t))
    k = min(config.k, len(P))
    params = practical_params(k, config.epsilon, N=config.N, M=config.M,
                              repetitions=config.repetitions,
                              master_seed=derive_seed(config.master_seed, _PTAS, t))
    ptas_cost = find_k_means(P, k, params).cost
    _, _, oracle_cost = optimal_kmeans(P, k)
    seeds = kmeanspp_seed(P, k, derive_rng(config.master_seed, _BASELINE, t))
    baseline_cost = cost(P, lloyd_refine(P, seeds))
    return TrialResult(ptas_cost=ptas_cost, oracle_cost=oracle_cost,
                       ratio=approximation_ratio(ptas_cost, oracle_cost),
                       baseline_cost=baseline_cost)


def ratio_experiment(config: ExperimentConfig) -> RatioReport:
    """PTAS vs. exact oracle over ``config.trials`` seeded instances.

    Raises :class:`~d2ptas.errors.RefusalError` up front when instances are
    too large for the oracle.
    """
    n = len(config.dataset) if config.dataset is not None else config.n
    if n > MAX_POINTS:
        # fail before any trial work is done
        optimal_kmeans(np.zeros((n, 1)), 1)
    start = time.perf_counter()
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            trials = list(pool.map(lambda t: _run_trial(config, t), range(config.trials)))
    else:
        trials = [_run_trial(config, t) for t in range(config.trials)]
    return RatioReport(trials=trials, epsilon=config.epsilon,
                       runtime_s=time.perf_counter() - start)


@dataclass(frozen=True)
class SamplingTestResult:
    success_rate: float
    threshold: float
    sample_size: int
    trials: int

    @property
    def passed(self) -> bool:
        return self.success_rate >= self.threshold


def sampling_property_test(
    gamma: float,
    delta: float,
    n: int,
    d: int,
    trials: int,
    rng: Rng,
    sample_size: Optional[int] = None,
) -> SamplingTestResult:
    """Empirical check that a uniform sample's mean is a near-optimal 1-center.

    Each trial draws a fresh uniform point set, takes ``ceil(1/(gamma*delta))``
    points uniformly with replacement (or ``sample_size`` if given) and tests
    ``cost(P, mean(sample)) <= (1 + gamma) * cost(P, mean(P))``. The test
    passes when the success rate is at least ``1 - delta`` minus three
    binomial standard errors.
    """
    if trials < 100:
        raise UsageError("sampling_property_test needs at least 100 trials")
    size = kmeans_sample_size(gamma, delta) if sample_size is None else sample_size
    successes = 0
    for _ in range(trials):
        P = rng.uniform(0.0, 1.0, size=(n, d))
        sample = P[rng.integers(n, size=size)]
        optimum = cost(P, centroid(P)[None, :])
        # the mean of repeated points can be off by an ulp
        slack = _ROUNDING_SLACK * max(1.0, optimum)
        if cost(P, centroid(sample)[None, :]) <= (1 + gamma) * optimum + slack:
            successes += 1
    threshold = (1 - delta) - 3 * math.sqrt(delta * (1 - delta) / trials)
    return SamplingTestResult(success_rate=successes / trials, threshold=threshold,
                              sample_size=size, trials=trials)
