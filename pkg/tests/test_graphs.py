import itertools
import math

import numpy as np
import pytest
from scipy.stats import ks_2samp

from plrank import (
    BlockModelConfig,
    CapExceededError,
    Dataset,
    EdgeSizeRule,
    IsolatedVertexError,
    Observation,
    RandomHypergraphConfig,
    boundary_edges,
    center,
    degree_stats,
    edge_sharing_ratio,
    expansion_chain_bound,
    graph_diagnostics,
    is_connected,
    modified_cheeger,
    sample_block_model,
    sample_distinct_edges,
    sample_random_hypergraph,
    shared_edges,
    spectral_diagnostics,
)
from plrank.graphs import chain_score, enumerate_admissible_chains, modified_cheeger_bruteforce


def constant_config(n, m, p):
    return RandomHypergraphConfig(n=n, rules=(EdgeSizeRule(m=m, mode="constant", p=p),))


class TestGenerators:
    def test_zero_probability_empty(self):
        rng = np.random.default_rng(0)
        cfg = RandomHypergraphConfig(4, (EdgeSizeRule(2, "constant", p=0.0), EdgeSizeRule(3, "constant", p=0.0)))
        assert sample_random_hypergraph(cfg, rng) == []

    def test_probability_one_gives_complete_graph(self):
        rng = np.random.default_rng(1)
        edges = sample_random_hypergraph(constant_config(4, 2, 1.0), rng)
        assert sorted(edges) == sorted(itertools.combinations(range(4), 2))

    def test_binomial_edge_count_moments(self):
        rng = np.random.default_rng(2)
        n, m, p, draws = 20, 3, 0.3, 2000
        total = math.comb(n, m)
        counts = [len(sample_random_hypergraph(constant_config(n, m, p), rng)) for _ in range(draws)]
        se = math.sqrt(total * p * (1 - p) / draws)
        assert abs(np.mean(counts) - p * total) < 3 * se

    def test_fixed_count_mode(self):
        rng = np.random.default_rng(3)
        cfg = RandomHypergraphConfig(10, (EdgeSizeRule(3, "fixed", count=25),))
        edges = sample_random_hypergraph(cfg, rng)
        assert len(edges) == 25
        assert len(set(edges)) == 25
        assert all(len(e) == 3 and list(e) == sorted(e) for e in edges)

    def test_nonuniform_mode(self):
        rng = np.random.default_rng(4)
        cfg = RandomHypergraphConfig(8, (EdgeSizeRule(2, "uniform", p=0.1, q=0.9),))
        edges = sample_random_hypergraph(cfg, rng)
        assert all(len(e) == 2 for e in edges)
        with pytest.raises(CapExceededError):
            sample_random_hypergraph(
                RandomHypergraphConfig(300, (EdgeSizeRule(4, "uniform", p=0.1, q=0.2),)),
                rng,
                enumeration_cap=1000,
            )

    def test_determinism(self):
        cfg = RandomHypergraphConfig(
            15, (EdgeSizeRule(2, "constant", p=0.2), EdgeSizeRule(4, "fixed", count=12))
        )
        a = sample_random_hypergraph(cfg, np.random.default_rng(77))
        b = sample_random_hypergraph(cfg, np.random.default_rng(77))
        assert a == b
        block = BlockModelConfig(m=3, community_sizes=(5, 7), omega_within=(0.2, 0.1), omega_cross=0.05)
        xa = sample_block_model(block, np.random.default_rng(78))
        xb = sample_block_model(block, np.random.default_rng(78))
        assert xa == xb

    def test_distinct_edges_exhausts_support(self):
        rng = np.random.default_rng(5)
        edges = sample_distinct_edges(range(5), 2, 10, rng)
        assert sorted(edges) == sorted(itertools.combinations(range(5), 2))
        with pytest.raises(ValueError):
            sample_distinct_edges(range(5), 2, 11, rng)


class TestBlockModel:
    def test_cross_probability_zero(self):
        rng = np.random.default_rng(6)
        cfg = BlockModelConfig(m=3, community_sizes=(6, 6), omega_within=(0.5, 0.5), omega_cross=0.0)
        for e in sample_block_model(cfg, rng):
            assert max(e) < 6 or min(e) >= 6

    def test_binomial_moments_per_type(self):
        rng = np.random.default_rng(7)
        n1, n2, m = 8, 12, 3
        w = (0.5, 0.3)
        cross_p = 0.2
        cfg = BlockModelConfig(m=m, community_sizes=(n1, n2), omega_within=w, omega_cross=cross_p)
        draws = 600
        within1 = within2 = cross = 0
        for _ in range(draws):
            for e in sample_block_model(cfg, rng):
                if max(e) < n1:
                    within1 += 1
                elif min(e) >= n1:
                    within2 += 1
                else:
                    cross += 1
        c1, c2 = math.comb(n1, m), math.comb(n2, m)
        c0 = math.comb(n1 + n2, m) - c1 - c2
        for seen, total, p in ((within1, c1, w[0]), (within2, c2, w[1]), (cross, c0, cross_p)):
            se = math.sqrt(total * p * (1 - p) / draws)
            assert abs(seen / draws - total * p) < 3 * se

    def test_equal_probabilities_match_uniform_model(self):
        # same inclusion law as the one-probability model: compare edge counts
        rng_a = np.random.default_rng(8)
        rng_b = np.random.default_rng(9)
        p = 0.12
        cfg_block = BlockModelConfig(m=3, community_sizes=(6, 9), omega_within=(p, p), omega_cross=p)
        counts_a = [len(sample_block_model(cfg_block, rng_a)) for _ in range(300)]
        counts_b = [len(sample_random_hypergraph(constant_config(15, 3, p), rng_b)) for _ in range(300)]
        assert ks_2samp(counts_a, counts_b).pvalue > 0.01

    def test_fixed_counts_mode(self):
        rng = np.random.default_rng(10)
        cfg = BlockModelConfig(m=3, community_sizes=(6, 8), fixed_counts=(4, 5, 6))
        edges = sample_block_model(cfg, rng)
        w1 = sum(1 for e in edges if max(e) < 6)
        w2 = sum(1 for e in edges if min(e) >= 6)
        assert (w1, w2, len(edges) - w1 - w2) == (4, 5, 6)


class TestDegreeDiagnostics:
    def test_shared_edges_example(self):
        edges = [(0, 1, 2), (0, 1, 3)]
        deg, dmin, dmax = degree_stats(edges, 4)
        assert deg.tolist() == [2, 2, 1, 1]
        assert (dmin, dmax) == (1, 2)
        counts = shared_edges(edges, 4)
        assert counts[(0, 1)] == 2
        assert edge_sharing_ratio(edges, 4) == 1.0

    def test_disjoint_pairs(self):
        # co-occupants of a pairwise edge share exactly that edge: ratio 1/N_min
        assert edge_sharing_ratio([(0, 1), (2, 3)], 4) == 1.0
        assert edge_sharing_ratio([(0, 1), (0, 1), (2, 3), (2, 3)], 4) == 1.0

    def test_simple_pairwise_ratio_is_inverse_min_degree(self):
        edges = list(itertools.combinations(range(5), 2))
        deg, dmin, _ = degree_stats(edges, 5)
        assert edge_sharing_ratio(edges, 5) == pytest.approx(1.0 / dmin)

    def test_multiplicity_counts(self):
        edges = [(0, 1)] * 3 + [(1, 2)]
        deg, _, _ = degree_stats(edges, 3)
        assert deg.tolist() == [3, 4, 1]
        assert shared_edges(edges, 3)[(0, 1)] == 3

    def test_degree_concentration(self):
        # constant-probability model, target mean degree 120: all realized
        # degrees stay within a factor-2 band across repeated draws
        rng = np.random.default_rng(11)
        n, m = 200, 3
        target = 120.0
        p = target / math.comb(n - 1, m - 1)
        cfg = constant_config(n, m, p)
        for _ in range(200):
            edges = sample_random_hypergraph(cfg, rng)
            deg, dmin, dmax = degree_stats(edges, n)
            assert dmin >= 0.5 * target
            assert dmax <= 2.0 * target


class TestBoundaryAndCheeger:
    def test_boundary_edges(self):
        edges = [(0, 1, 2), (2, 3), (3, 4)]
        assert boundary_edges(edges, {0, 1}) == [(0, 1, 2)]
        assert boundary_edges(edges, {2}) == [(0, 1, 2), (2, 3)]

    def test_single_triple_edge(self):
        assert modified_cheeger([(0, 1, 2)], 3) == pytest.approx(1.0)

    def test_disconnected_is_zero(self):
        assert modified_cheeger([(0, 1), (2, 3)], 4) == 0.0
        assert not is_connected([(0, 1), (2, 3)], 4)

    def test_complete_graph(self):
        edges = list(itertools.combinations(range(4), 2))
        assert modified_cheeger(edges, 4) == pytest.approx(2.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_bruteforce(self, seed):
        rng = np.random.default_rng(200 + seed)
        n = int(rng.integers(3, 8))
        edges = [
            tuple(sorted(rng.choice(n, size=int(rng.integers(2, min(4, n) + 1)), replace=False).tolist()))
            for _ in range(int(rng.integers(2, 10)))
        ]
        assert modified_cheeger(edges, n) == pytest.approx(modified_cheeger_bruteforce(edges, n), abs=1e-12)

    def test_monotone_under_edge_addition(self):
        rng = np.random.default_rng(12)
        for _ in range(5):
            n = int(rng.integers(4, 12))
            base = [tuple(sorted(rng.choice(n, size=2, replace=False).tolist())) for _ in range(n)]
            extra = tuple(sorted(rng.choice(n, size=3, replace=False).tolist()))
            assert modified_cheeger(base + [extra], n) >= modified_cheeger(base, n) - 1e-15

    def test_cap(self):
        with pytest.raises(CapExceededError):
            modified_cheeger([(0, 1)], 25)


class TestSpectral:
    def test_single_pair(self):
        spec = spectral_diagnostics([(0, 1)], estimator="qmle", leave_one_out=False)
        assert np.allclose(spec.eigenvalues, [0.0, 2.0], atol=1e-12)
        assert spec.s_gap == pytest.approx(0.0, abs=1e-12)

    def test_triangle(self):
        spec = spectral_diagnostics([(0, 1), (1, 2), (0, 2)], estimator="qmle")
        assert np.allclose(np.sort(spec.eigenvalues), [0.0, 1.5, 1.5], atol=1e-9)
        assert spec.s_gap == pytest.approx(0.5, abs=1e-9)
        # removing any vertex leaves a single pairwise edge: lambda_2 = 2 * 1/4
        assert spec.lambda2_leave == pytest.approx(0.5, abs=1e-9)

    def test_zero_eigenvector_is_sqrt_degrees(self):
        rng = np.random.default_rng(13)
        edges = [(0, 1, 2), (1, 2, 3), (2, 3, 4), (0, 4)]
        u = center(rng.uniform(-0.5, 0.5, 5))
        from plrank.graphs import _expected_neg_hessian

        lap = _expected_neg_hessian(Dataset(5, [Observation(e) for e in edges]), u, "full")
        d = np.sqrt(np.diag(lap))
        lsym = lap / d[:, None] / d[None, :]
        v = d / np.linalg.norm(d)
        assert np.linalg.norm(lsym @ v) < 1e-8
        eigs = np.linalg.eigvalsh(lsym)
        assert eigs[0] == pytest.approx(0.0, abs=1e-10)
        assert eigs[-1] <= 2.0 + 1e-10

    def test_shift_invariance_and_label_equivariance(self):
        rng = np.random.default_rng(14)
        edges = [(0, 1, 2), (1, 2, 3), (0, 3)]
        u = center(rng.uniform(-0.7, 0.7, 4))
        base = spectral_diagnostics(edges, u, estimator="qmle")
        shifted = spectral_diagnostics(edges, u + 3.0, estimator="qmle")
        assert base.s_gap == pytest.approx(shifted.s_gap, abs=1e-12)
        assert base.lambda2_leave == pytest.approx(shifted.lambda2_leave, abs=1e-12)
        perm = np.array([2, 0, 3, 1])
        edges_p = [tuple(sorted(int(perm[v]) for v in e)) for e in edges]
        u_p = np.empty(4)
        u_p[perm] = u
        relabeled = spectral_diagnostics(edges_p, u_p, estimator="qmle")
        assert base.s_gap == pytest.approx(relabeled.s_gap, abs=1e-10)
        assert base.lambda2_leave == pytest.approx(relabeled.lambda2_leave, abs=1e-10)

    def test_isolated_vertex_error(self):
        with pytest.raises(IsolatedVertexError) as err:
            spectral_diagnostics([(0, 1)], n=3)
        assert err.value.vertex == 2


class TestChainBound:
    def test_two_vertices(self):
        assert expansion_chain_bound([(0, 1)], 2) == pytest.approx(math.sqrt(math.log(2)))

    def test_complete_graph_at_least_single_step(self):
        edges = list(itertools.combinations(range(4), 2))
        h = modified_cheeger(edges, 4)
        assert expansion_chain_bound(edges, 4) >= math.sqrt(math.log(4) / h) - 1e-12

    @pytest.mark.parametrize("seed", range(4))
    def test_matches_chain_enumeration(self, seed):
        rng = np.random.default_rng(300 + seed)
        n = int(rng.integers(3, 6))
        edges = [tuple(sorted((k, (k + 1) % n))) for k in range(n)]
        for _ in range(int(rng.integers(0, 3))):
            edges.append(tuple(sorted(rng.choice(n, size=3, replace=False).tolist())))
        best = max(chain_score(edges, n, ch) for ch in enumerate_admissible_chains(edges, n))
        assert expansion_chain_bound(edges, n) == pytest.approx(best, abs=1e-12)

    def test_nonincreasing_on_shared_chains_under_edge_addition(self):
        rng = np.random.default_rng(15)
        n = 5
        base = [tuple(sorted((k, (k + 1) % n))) for k in range(n)]
        bigger = base + [(0, 2), (1, 3, 4)]
        chains_a = set(enumerate_admissible_chains(base, n))
        chains_b = set(enumerate_admissible_chains(bigger, n))
        common = chains_a & chains_b
        assert common
        for chain in itertools.islice(common, 200):
            assert chain_score(bigger, n, chain) <= chain_score(base, n, chain) + 1e-12

    def test_disconnected_raises(self):
        with pytest.raises(ValueError, match="disconnected"):
            expansion_chain_bound([(0, 1), (2, 3)], 4)

    def test_cap(self):
        with pytest.raises(CapExceededError):
            expansion_chain_bound([(0, 1)], 11)


class TestBundle:
    def test_graph_diagnostics_fields(self):
        edges = [(0, 1, 2), (1, 2, 3), (0, 3)]
        diag = graph_diagnostics(edges, n=4, exact_cheeger=True, chain_bound=True)
        d = diag.to_dict()
        assert d["n"] == 4 and d["n_edges"] == 3
        assert d["connected"] is True
        assert d["degree_min"] == 2 and d["degree_max"] == 2
        assert 0.0 <= d["r_ratio"] <= 1.0
        assert d["cheeger"] > 0 and d["gamma_re"] > 0
        assert d["s_gap"] is not None and d["lambda2_leave"] is not None
