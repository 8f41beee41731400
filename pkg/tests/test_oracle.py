from functools import lru_cache
from itertools import product

import numpy as np
import pytest

from d2ptas.errors import RefusalError, UsageError
from d2ptas.measure import centroid, cost
from d2ptas.oracle import Partition, enumerate_partitions, optimal_kmeans


@lru_cache(maxsize=None)
def stirling2(n, k):
    if n == k:
        return 1
    if k == 0 or k > n:
        return 0
    return k * stirling2(n - 1, k) + stirling2(n - 1, k - 1)


def brute_force_cost(P, k):
    """Minimum over every labelling in range(k)^n, block means as centers."""
    best = np.inf
    for labels in product(range(k), repeat=len(P)):
        labels = np.array(labels)
        total = sum(cost(P[labels == j], centroid(P[labels == j])[None, :])
                    for j in range(k) if np.any(labels == j))
        best = min(best, total)
    return best


class TestEnumeratePartitions:
    def test_n3_k2(self):
        got = [p.blocks() for p in enumerate_partitions(3, 2)]
        assert got == [[[0, 1, 2]], [[0, 1], [2]], [[0, 2], [1]], [[0], [1, 2]]]

    def test_n4_k2(self):
        assert len(list(enumerate_partitions(4, 2))) == 8

    def test_includes_singletons(self):
        parts = list(enumerate_partitions(4, 4))
        assert Partition(labels=(0, 1, 2, 3), k_used=4) in parts

    @pytest.mark.parametrize("n", range(1, 11))
    def test_counts_match_stirling_sums(self, n):
        for k in range(1, n + 1):
            expected = sum(stirling2(n, j) for j in range(1, k + 1))
            assert sum(1 for _ in enumerate_partitions(n, k)) == expected

    def test_restricted_growth_and_unique(self):
        parts = list(enumerate_partitions(6, 3))
        assert len({p.labels for p in parts}) == len(parts)
        for p in parts:
            seen = -1
            for lab in p.labels:
                assert lab <= seen + 1
                seen = max(seen, lab)
            assert p.k_used == seen + 1 <= 3
        assert [p.labels for p in parts] == sorted(p.labels for p in parts)

    def test_size_cap(self):
        with pytest.raises(RefusalError):
            next(enumerate_partitions(16, 2))
        with pytest.raises(UsageError):
            next(enumerate_partitions(3, 4))


class TestOptimalKMeans:
    def test_hand_example(self):
        part, centers, best = optimal_kmeans([0, 1, 4, 5], 2)
        assert part.blocks() == [[0, 1], [2, 3]]
        np.testing.assert_array_equal(centers, [[0.5], [4.5]])
        assert best == 1.0

    def test_k_equals_n(self, rng):
        _, _, best = optimal_kmeans(rng.normal(size=(6, 2)), 6)
        assert best == 0

    def test_k_one(self, rng):
        P = rng.normal(size=(7, 3))
        _, centers, best = optimal_kmeans(P, 1)
        np.testing.assert_allclose(centers[0], P.mean(axis=0))
        assert best == pytest.approx(cost(P, P.mean(axis=0)[None, :]), rel=1e-12)

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_brute_force_labelling(self, seed):
        rng = np.random.default_rng(seed)
        n, k = rng.integers(3, 8), rng.integers(1, 4)
        P = rng.normal(size=(n, 2))
        _, centers, best = optimal_kmeans(P, k)
        assert best == pytest.approx(brute_force_cost(P, k), rel=1e-12)
        assert cost(P, centers) == pytest.approx(best, rel=1e-12)

    def test_permutation_invariance(self, rng):
        P = rng.normal(size=(9, 2))
        _, _, a = optimal_kmeans(P, 3)
        _, _, b = optimal_kmeans(P[rng.permutation(9)], 3)
        assert b == pytest.approx(a, rel=1e-12)

    def test_dominates_random_center_sets(self, rng):
        P = rng.normal(size=(10, 2))
        _, _, best = optimal_kmeans(P, 3)
        for _ in range(200):
            C = P[rng.choice(10, size=3, replace=False)] + rng.normal(scale=0.1, size=(3, 2))
            assert best <= cost(P, C) * (1 + 1e-12)

    def test_threads_do_not_change_result(self, rng):
        P = rng.normal(size=(11, 2))
        a = optimal_kmeans(P, 3, threads=1)
        b = optimal_kmeans(P, 3, threads=4)
        assert a[0] == b[0] and a[2] == b[2]

    def test_refusal(self):
        with pytest.raises(RefusalError):
            optimal_kmeans(np.zeros((16, 1)), 2)
