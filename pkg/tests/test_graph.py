"""Time-directed graph construction and the propagation fixed point.

The oracle here re-derives everything from raw similarities with plain
loops: forward selection, threshold subtraction, reversal, time split,
column normalization, then repeated dense multiplication to 1e-12.
"""

import numpy as np
import pytest

from creascore import (
    GraphConfig,
    SimilarityMatrix,
    ThresholdError,
    ThresholdRule,
    build_graph_pair,
    compute_threshold,
    effective_matrix,
    solve_scores,
)

from conftest import random_similarity


def oracle_split(sim, times, tau):
    """Loop re-derivation of the thresholded, reversed, time-split graphs."""
    m = len(times)
    wq = np.zeros((m, m))
    wp = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            if i == j or times[i] >= times[j]:
                continue
            residual = sim[i, j] - tau
            if residual >= 0.0:
                wq[i, j] = residual
            else:
                wp[j, i] = -residual
    return wp, wq


def oracle_normalize(w):
    m = w.shape[0]
    out = np.zeros_like(w)
    dangling = []
    for j in range(m):
        total = w[:, j].sum()
        if total > 0.0:
            out[:, j] = w[:, j] / total
        else:
            dangling.append(j)
    return out, dangling


def oracle_scores(sim, times, tau, alpha, beta, tol=1e-12, max_iter=500000):
    """Dense fixed point by repeated multiplication, fully independent of
    the engine's solver."""
    m = len(times)
    wp_raw, wq_raw = oracle_split(sim, times, tau)
    wp, dang_p = oracle_normalize(wp_raw)
    wq, dang_q = oracle_normalize(wq_raw)
    mp = wp.copy()
    mp[:, dang_p] = 1.0 / m
    mq = wq.copy()
    mq[:, dang_q] = 1.0 / m
    dense = (1 - alpha) / m * np.ones((m, m)) + alpha * beta * mp + alpha * (1 - beta) * mq
    c = np.full(m, 1.0 / m)
    for _ in range(max_iter):
        nxt = dense @ c
        nxt /= nxt.sum()
        if np.abs(nxt - c).sum() < tol:
            c = nxt
            break
        c = nxt
    return c, wp, wq, dang_p, dang_q


class TestThresholdRule:
    def test_parse_round_trip(self):
        assert str(ThresholdRule.parse("fixed(0.4)")) == "fixed(0.4)"
        assert str(ThresholdRule.parse("percentile(50)")) == "percentile(50)"
        assert ThresholdRule.parse(" percentile(75) ").value == 75.0

    def test_parse_rejects_garbage(self):
        with pytest.raises(ValueError):
            ThresholdRule.parse("median")
        with pytest.raises(ValueError):
            ThresholdRule("quantile", 0.5)

    def test_percentile_range(self):
        with pytest.raises(ValueError):
            ThresholdRule.percentile(0)
        with pytest.raises(ValueError):
            ThresholdRule.percentile(100)


class TestComputeThreshold:
    def test_fixed(self):
        assert compute_threshold(np.array([[0.3]]), ThresholdRule.fixed(0.4)) == 0.4

    def test_median_of_positives(self):
        weights = np.array([0.1, 0.5, 0.9, 0.0, 0.0])
        assert compute_threshold(weights, ThresholdRule.percentile(50)) == 0.5

    def test_degenerate_distribution(self):
        weights = np.full(6, 0.7)
        assert compute_threshold(weights, ThresholdRule.percentile(90)) == pytest.approx(
            0.7, abs=1e-12
        )

    def test_no_positive_edges(self):
        with pytest.raises(ThresholdError):
            compute_threshold(np.zeros((3, 3)), ThresholdRule.percentile(50))


class TestGraphConfig:
    def test_defaults_match_operating_point(self):
        config = GraphConfig()
        assert config.alpha == 0.95
        assert config.beta == 0.2
        assert config.threshold_rule == ThresholdRule.percentile(50)

    def test_validation(self):
        with pytest.raises(ValueError):
            GraphConfig(alpha=1.0)
        with pytest.raises(ValueError):
            GraphConfig(alpha=0.0)
        with pytest.raises(ValueError):
            GraphConfig(beta=1.5)
        with pytest.raises(ValueError):
            GraphConfig(convergence_tol=0.0)
        with pytest.raises(ValueError):
            GraphConfig(max_iterations=0)


def _config(tau, alpha=0.95, beta=0.2):
    return GraphConfig(alpha=alpha, beta=beta, threshold_rule=ThresholdRule.fixed(tau))


class TestBuildGraphPair:
    def test_forward_edge_survives(self):
        # Hand trace: one forward pair with similarity 1, tau 0.5. The
        # residual 0.5 sits in the subsequent graph and normalizes to 1;
        # nothing reverses.
        sim = SimilarityMatrix("a", "linear", np.ones((2, 2)))
        graphs = build_graph_pair(sim, np.array([1990, 2000]), _config(0.5))
        assert graphs.threshold == 0.5
        assert np.array_equal(graphs.subsequent, [[0.0, 1.0], [0.0, 0.0]])
        assert graphs.prior.sum() == 0.0
        assert list(graphs.dangling_subsequent) == [0]
        assert list(graphs.dangling_prior) == [0, 1]

    def test_negative_residual_reverses(self):
        # Hand trace: similarity 0.2 under tau 0.5 reverses into a prior
        # edge of weight 0.3 crediting the later artifact.
        values = np.array([[1.0, 0.2], [0.2, 1.0]])
        sim = SimilarityMatrix("a", "linear", values)
        graphs = build_graph_pair(sim, np.array([1990, 2000]), _config(0.5))
        assert np.array_equal(graphs.prior, [[0.0, 0.0], [1.0, 0.0]])
        assert graphs.subsequent.sum() == 0.0
        assert list(graphs.dangling_prior) == [1]

    def test_single_year_fully_dangling(self):
        sim = SimilarityMatrix("a", "linear", np.ones((3, 3)))
        graphs = build_graph_pair(
            sim, np.array([2000, 2000, 2000]), GraphConfig()
        )
        assert graphs.fully_dangling
        assert graphs.prior.sum() == 0.0
        assert graphs.subsequent.sum() == 0.0

    def test_empty_corpus(self):
        sim = SimilarityMatrix("a", "linear", np.empty((0, 0)))
        with pytest.raises(ValueError):
            build_graph_pair(sim, np.array([], dtype=np.int64), GraphConfig())

    def test_negative_similarity_rejected(self):
        sim = SimilarityMatrix("a", "cosine", np.array([[1.0, -0.2], [-0.2, 1.0]]))
        with pytest.raises(ValueError):
            build_graph_pair(sim, np.array([1990, 2000]), GraphConfig())

    def test_matches_oracle_split(self, rng):
        for _ in range(10):
            m = int(rng.integers(3, 20))
            sim = random_similarity(m, rng)
            times = rng.integers(1980, 1995, size=m)
            tau = float(rng.uniform(0.1, 0.9))
            graphs = build_graph_pair(sim, times, _config(tau))
            wp_raw, wq_raw = oracle_split(sim.values, times, tau)
            wp, dang_p = oracle_normalize(wp_raw)
            wq, dang_q = oracle_normalize(wq_raw)
            assert np.abs(graphs.prior - wp).max() < 1e-12
            assert np.abs(graphs.subsequent - wq).max() < 1e-12
            assert list(graphs.dangling_prior) == dang_p
            assert list(graphs.dangling_subsequent) == dang_q

    def test_column_stochastic(self, rng):
        for _ in range(10):
            m = int(rng.integers(2, 30))
            sim = random_similarity(m, rng)
            times = rng.integers(1980, 2000, size=m)
            graphs = build_graph_pair(sim, times, GraphConfig())
            for matrix, dangling in (
                (graphs.prior, graphs.dangling_prior),
                (graphs.subsequent, graphs.dangling_subsequent),
            ):
                sums = matrix.sum(axis=0)
                live = np.setdiff1d(np.arange(m), dangling)
                assert np.abs(sums[live] - 1.0).max() < 1e-12 if live.size else True
                assert np.abs(sums[dangling]).max() == 0.0 if len(dangling) else True


class TestSolveScores:
    def test_fully_dangling_uniform(self):
        sim = SimilarityMatrix("a", "linear", np.ones((4, 4)))
        graphs = build_graph_pair(sim, np.full(4, 2000), GraphConfig())
        scores = solve_scores(graphs, GraphConfig())
        assert np.abs(scores.aggregate - 0.25).max() < 1e-12
        assert scores.novelty.sum() == 0.0
        assert scores.influence.sum() == 0.0
        assert scores.uniform_correction == pytest.approx(0.95 / 4, abs=1e-12)
        assert scores.converged

    def test_three_artifact_chain_vs_oracle(self):
        sim = SimilarityMatrix("a", "linear", np.ones((3, 3)))
        times = np.array([1, 2, 3])
        config = _config(0.0)
        graphs = build_graph_pair(sim, times, config)
        scores = solve_scores(graphs, config)
        expected, *_ = oracle_scores(sim.values, times, 0.0, 0.95, 0.2)
        assert np.abs(scores.aggregate - expected).sum() < 1e-8

    def test_random_graphs_vs_oracle(self, rng):
        for _ in range(10):
            m = int(rng.integers(2, 25))
            sim = random_similarity(m, rng)
            times = rng.integers(1980, 1990, size=m)
            tau = float(rng.uniform(0.2, 0.8))
            config = _config(tau)
            graphs = build_graph_pair(sim, times, config)
            scores = solve_scores(graphs, config)
            expected, *_ = oracle_scores(sim.values, times, tau, 0.95, 0.2)
            assert np.abs(scores.aggregate - expected).sum() < 1e-8

    def test_decomposition_identity(self, rng):
        for _ in range(20):
            m = int(rng.integers(2, 30))
            sim = random_similarity(m, rng)
            times = rng.integers(1980, 2000, size=m)
            config = GraphConfig()
            graphs = build_graph_pair(sim, times, config)
            scores = solve_scores(graphs, config)
            recomposed = (
                (1 - config.alpha) / m
                + scores.novelty
                + scores.influence
                + scores.uniform_correction
            )
            assert np.abs(scores.aggregate - recomposed).max() < 1e-10

    def test_aggregate_normalized_nonnegative(self, rng):
        for _ in range(10):
            m = int(rng.integers(2, 30))
            sim = random_similarity(m, rng)
            times = rng.integers(1980, 2000, size=m)
            graphs = build_graph_pair(sim, times, GraphConfig())
            scores = solve_scores(graphs, GraphConfig())
            assert abs(scores.aggregate.sum() - 1.0) < 1e-9
            assert scores.aggregate.min() >= 0.0
            assert scores.novelty.min() >= 0.0
            assert scores.influence.min() >= 0.0

    def test_stationarity_at_convergence(self, rng):
        config = GraphConfig()
        for _ in range(5):
            m = int(rng.integers(3, 25))
            sim = random_similarity(m, rng)
            times = rng.integers(1980, 2000, size=m)
            graphs = build_graph_pair(sim, times, config)
            scores = solve_scores(graphs, config)
            assert scores.converged
            dense = effective_matrix(graphs, config)
            drift = np.abs(dense @ scores.aggregate - scores.aggregate).sum()
            assert drift < 10 * config.convergence_tol

    def test_non_convergence_reported(self, rng):
        sim = random_similarity(15, rng)
        times = rng.integers(1980, 2000, size=15)
        config = GraphConfig(max_iterations=2)
        graphs = build_graph_pair(sim, times, config)
        scores = solve_scores(graphs, config)
        assert not scores.converged
        assert scores.iterations_used == 2

    def test_scale_invariance(self, rng):
        m = 12
        sim = random_similarity(m, rng)
        times = rng.integers(1980, 1990, size=m)
        tau = 0.4
        scale = 3.7
        a = build_graph_pair(sim, times, _config(tau))
        scaled = SimilarityMatrix(sim.attribute, sim.kernel, sim.values * scale)
        b = build_graph_pair(scaled, times, _config(tau * scale))
        assert np.abs(a.prior - b.prior).max() < 1e-12
        assert np.abs(a.subsequent - b.subsequent).max() < 1e-12
        sa = solve_scores(a, GraphConfig())
        sb = solve_scores(b, GraphConfig())
        assert np.abs(sa.aggregate - sb.aggregate).max() < 1e-12

    def test_permutation_equivariance(self, rng):
        m = 10
        sim = random_similarity(m, rng)
        times = rng.integers(1980, 2000, size=m)
        config = _config(0.5)
        base = solve_scores(build_graph_pair(sim, times, config), config)

        perm = rng.permutation(m)
        shuffled = SimilarityMatrix(
            sim.attribute, sim.kernel, sim.values[np.ix_(perm, perm)]
        )
        permuted = solve_scores(build_graph_pair(shuffled, times[perm], config), config)
        assert np.abs(permuted.aggregate - base.aggregate[perm]).max() < 1e-9
        assert np.abs(permuted.novelty - base.novelty[perm]).max() < 1e-9
        assert np.abs(permuted.influence - base.influence[perm]).max() < 1e-9
