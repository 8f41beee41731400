import math
from itertools import combinations

import numpy as np
import pytest

from d2ptas.errors import RefusalError, UsageError
from d2ptas.measure import cost
from d2ptas.oracle import optimal_kmeans
from d2ptas.ptas import (
    BestLeaf,
    PtasParams,
    find_k_means,
    leaf_estimate_log2,
    practical_params,
    rank_of_subset,
    sample_centers,
    subset_by_rank,
    theoretical_params,
    theoretical_ptas_params,
)
from d2ptas.sampler import DistanceCache, derive_rng, draw_multiset


def params(N, M, reps=1, seed=0):
    return PtasParams(N=N, M=M, repetitions=reps, master_seed=seed)


def naive_search(P, k, prm, r):
    """Reference recursion: one leaf at a time, costs recomputed from scratch."""
    rng = derive_rng(prm.master_seed, r)
    cache = DistanceCache(P)
    leaves = []

    def rec(centers):
        if len(centers) == k:
            leaves.append((cost(P, np.array(centers)), np.array(centers)))
            return
        S = draw_multiset(cache, prm.N, rng)
        for T in combinations(range(prm.N), prm.M):
            c = P[S[list(T)]].mean(axis=0)
            cache.push_center(c)
            rec(centers + [c])
            cache.pop_center()

    rec([])
    return leaves


class TestTheoreticalParams:
    # hand substitution: alpha=2, beta=1 -> eta = 2*4/1*(1+1) = 16;
    # M = ceil(1/((eps/32)*0.2)) = 160/eps; N = 64*2*16*k/eps^2 * M = 2048*k*M/eps^2
    @pytest.mark.parametrize("k", [1, 2, 5])
    @pytest.mark.parametrize("eps, M", [(1.0, 160), (0.5, 320), (0.25, 640)])
    def test_kmeans_constants(self, k, eps, M):
        tp = theoretical_params(k, eps)
        assert tp.eta == 16
        assert tp.M == M
        assert tp.N == 2048 * k * M / eps**2
        assert tp.N == 327680 * k / eps**3

    def test_k2_eps1(self):
        tp = theoretical_params(2, 1.0)
        assert (tp.eta, tp.M, tp.N) == (16.0, 160, 655360)
        assert tp.kappa_log2 == pytest.approx(math.log2(math.comb(655360, 160)), rel=1e-12)

    def test_generic_measure_eta(self):
        from d2ptas.measure import MeasureSpec, kmeans_sample_size, sq_euclidean

        m = MeasureSpec("m", 1.0, 0.5, sq_euclidean, kmeans_sample_size)
        # 2 * 1 / 0.25 * (1 + 2) = 24
        assert theoretical_params(1, 1.0, m).eta == 24

    def test_params_object(self):
        p = theoretical_ptas_params(3, 1.0)
        assert (p.N, p.M, p.repetitions, p.mode) == (983040, 160, 8, "theoretical")

    def test_refuses_to_search(self):
        P = np.arange(10.0)[:, None]
        with pytest.raises(RefusalError, match="exceeds budget"):
            find_k_means(P, 2, theoretical_ptas_params(2, 1.0))


class TestPracticalParams:
    def test_defaults(self):
        p = practical_params(2, 1.0)
        assert (p.N, p.M, p.repetitions) == (16, 2, 4)
        assert practical_params(1, 1.0).N == 8
        assert practical_params(3, 0.5).N == 48
        assert practical_params(1, 1.0, N=3, M=1).N == 3

    def test_m_larger_than_n(self):
        with pytest.raises(UsageError):
            PtasParams(N=2, M=3, repetitions=1)

    def test_bad_epsilon(self):
        with pytest.raises(UsageError):
            practical_params(2, 0.0)


class TestSubsetByRank:
    def test_first_and_last(self):
        assert subset_by_rank(4, 2, 0) == (0, 1)
        assert subset_by_rank(4, 2, 5) == (2, 3)

    def test_matches_lexicographic_enumeration(self):
        expected = list(combinations(range(7), 3))
        assert len(expected) == 35
        got = [subset_by_rank(7, 3, r) for r in range(35)]
        assert got == expected
        assert [rank_of_subset(7, s) for s in got] == list(range(35))

    @pytest.mark.parametrize("N, M", [(1, 1), (5, 5), (6, 1), (9, 4)])
    def test_bijective(self, N, M):
        subsets = [subset_by_rank(N, M, r) for r in range(math.comb(N, M))]
        assert subsets == list(combinations(range(N), M))

    def test_big_rank(self):
        N, M = 200, 20
        last = math.comb(N, M) - 1
        assert subset_by_rank(N, M, last) == tuple(range(N - M, N))
        assert rank_of_subset(N, subset_by_rank(N, M, 12345678901234)) == 12345678901234

    def test_out_of_range(self):
        with pytest.raises(UsageError):
            subset_by_rank(4, 2, 6)
        with pytest.raises(UsageError):
            subset_by_rank(4, 2, -1)


class TestSampleCenters:
    def test_base_case_is_one_evaluation(self):
        P = np.array([[0.0], [1.0], [3.0]])
        cache = DistanceCache(P)
        cache.push_center([0.0])
        best = BestLeaf()
        sample_centers(1, 1, [np.array([0.0])], cache, params(4, 2), derive_rng(0), best)
        assert best.leaves == 1 and best.cost == 10
        assert cache.depth == 1

    def test_single_subset_is_a_path(self):
        P = np.random.default_rng(1).normal(size=(8, 2))
        best = BestLeaf(record=[])
        cache = DistanceCache(P)
        sample_centers(3, 0, [], cache, params(2, 2), derive_rng(0), best)
        assert best.leaves == 1 and len(best.record) == 1
        assert best.centers.shape == (3, 2)
        assert cache.depth == 0

    def test_leaf_count(self):
        P = np.random.default_rng(2).normal(size=(9, 2))
        res = find_k_means(P, 2, params(4, 2))
        assert res.candidates_evaluated == 36

    @pytest.mark.parametrize("N, M, k, reps", [(4, 2, 3, 2), (5, 1, 2, 3), (3, 3, 2, 1)])
    def test_leaf_count_general(self, N, M, k, reps):
        P = np.random.default_rng(3).normal(size=(10, 2))
        res = find_k_means(P, k, params(N, M, reps))
        assert res.candidates_evaluated == reps * math.comb(N, M) ** k


class TestFindKMeans:
    def test_degenerate_n_le_k(self):
        P = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]])
        res = find_k_means(P, 3, practical_params(3))
        assert res.cost == 0
        np.testing.assert_array_equal(res.centers, P)

    def test_degenerate_duplicates(self):
        P = np.array([[1.0], [1.0]])
        res = find_k_means(P, 3, practical_params(3))
        assert res.cost == 0 and res.centers.shape == (1, 1)

    def test_two_point_hand_enumeration(self):
        # S is two uniform draws from {0, 2}: {0,0} or {2,2} -> center on a point,
        # cost 4; mixed -> center 1, cost 2 = optimum. Mixed has probability 1/2.
        P = np.array([[0.0], [2.0]])
        costs = [find_k_means(P, 1, params(2, 2, seed=s)).cost for s in range(2000)]
        assert set(costs) == {2.0, 4.0}
        hits = costs.count(2.0)
        assert abs(hits / 2000 - 0.5) <= 3 * math.sqrt(0.25 / 2000)

    def test_matches_naive_reference(self):
        P = np.random.default_rng(4).uniform(size=(9, 2))
        prm = params(5, 2, reps=3, seed=17)
        record = []
        res = find_k_means(P, 2, prm, leaf_record=record)
        ref = [naive_search(P, 2, prm, r) for r in range(3)]
        ref_costs = [c for leaves in ref for c, _ in leaves]
        assert len(record) == len(ref_costs) == res.candidates_evaluated
        np.testing.assert_allclose(record, ref_costs, rtol=1e-12)
        assert res.cost == min(record)
        # first minimum in traversal order wins
        j = int(np.argmin(ref_costs))
        flat = [ctr for leaves in ref for _, ctr in leaves]
        np.testing.assert_allclose(res.centers, flat[j], rtol=1e-12)

    def test_cost_matches_recomputation(self):
        P = np.random.default_rng(5).normal(size=(12, 3))
        res = find_k_means(P, 3, params(5, 2, reps=2, seed=3))
        assert res.cost == pytest.approx(cost(P, res.centers), rel=1e-9)
        assert res.centers.shape == (3, 3)

    def test_more_repetitions_never_hurt(self):
        P = np.random.default_rng(6).uniform(size=(10, 2))
        costs = [find_k_means(P, 2, params(5, 2, reps=r, seed=99)).cost for r in range(1, 9)]
        assert all(b <= a for a, b in zip(costs, costs[1:]))

    def test_deterministic_across_threads(self):
        P = np.random.default_rng(7).uniform(size=(10, 2))
        prm = params(6, 2, reps=6, seed=1234)
        a = find_k_means(P, 2, prm, threads=1)
        b = find_k_means(P, 2, prm, threads=4)
        c = find_k_means(P, 2, prm, threads=1)
        assert a.cost == b.cost == c.cost
        np.testing.assert_array_equal(a.centers, b.centers)
        np.testing.assert_array_equal(a.centers, c.centers)

    def test_budget_refusal_names_estimate(self):
        P = np.random.default_rng(8).uniform(size=(10, 2))
        with pytest.raises(RefusalError, match=r"binomial\(16,2\)\^4"):
            find_k_means(P, 4, params(16, 2), leaf_budget=10**8)
        assert leaf_estimate_log2(16, 2, 4) == pytest.approx(4 * math.log2(120))

    def test_budget_boundary_is_exact(self):
        P = np.random.default_rng(8).uniform(size=(10, 2))
        assert find_k_means(P, 2, params(4, 2), leaf_budget=36).candidates_evaluated == 36
        with pytest.raises(RefusalError):
            find_k_means(P, 2, params(4, 2), leaf_budget=35)

    def test_separated_clusters_near_optimal(self):
        # four tight clusters of three points at the corners of a 100-square
        rng = np.random.default_rng(10)
        corners = np.array([[0, 0], [100, 0], [0, 100], [100, 100]], dtype=float)
        P = np.repeat(corners, 3, axis=0) + rng.uniform(-1, 1, size=(12, 2))
        res = find_k_means(P, 4, PtasParams(N=6, M=2, repetitions=4, master_seed=5))
        _, _, opt = optimal_kmeans(P, 4)
        assert opt <= res.cost <= 1.5 * opt
