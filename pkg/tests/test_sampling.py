"""Combination distribution and triple samplers."""

import logging

import numpy as np
import pytest

from conftest import make_graph
from pogcf.errors import EmptyGraphError
from pogcf.graph import InteractionLog, build_pog, merge_logs
from pogcf.order import build_rank_function, validate_order
from pogcf.rng import substream
from pogcf.sampling import (
    CombinationDistribution,
    TripleSampler,
    build_distribution,
    sample_batch,
)


class TestDistribution:
    def test_hand_computed_two_pools(self):
        dist = CombinationDistribution(np.array([1, 2]), np.array([10, 5]), gamma=1.0)
        assert np.abs(dist.probs - [0.5, 0.5]).max() < 1e-12

    def test_gamma_zero_is_pure_frequency(self):
        dist = CombinationDistribution(np.array([3, 7]), np.array([30, 10]), gamma=0.0)
        assert np.abs(dist.probs - [0.75, 0.25]).max() < 1e-12

    def test_single_pool(self):
        dist = CombinationDistribution(np.array([4]), np.array([9]), gamma=2.0)
        assert dist.probs.tolist() == [1.0]

    def test_probs_normalize(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 8))
            ranks = rng.choice(np.arange(1, 40), size=n, replace=False)
            counts = rng.integers(1, 1000, size=n)
            gamma = float(rng.uniform(-1, 3))
            dist = CombinationDistribution(ranks, counts, gamma)
            assert abs(dist.probs.sum() - 1.0) < 1e-12
            assert (dist.probs > 0).all()

    def test_gamma_monotone_on_top_rank(self):
        ranks, counts = np.array([1, 2, 5]), np.array([50, 30, 4])
        p = [
            CombinationDistribution(ranks, counts, g).probs[-1]
            for g in (0.0, 0.5, 1.0, 2.0, 4.0)
        ]
        assert all(a < b for a, b in zip(p, p[1:]))

    def test_built_from_graph(self, rng):
        g, _, _, _ = make_graph(6, 8, {"a": 20, "b": 6}, 1.0, rng)
        dist = build_distribution(g, gamma=1.0)
        pool_counts = np.array([len(g.pools[r]) for r in sorted(g.pools)])
        ranks = np.array(sorted(g.pools))
        expected = ranks.astype(float) * pool_counts
        expected = expected / expected.sum()
        assert np.abs(dist.probs - expected).max() < 1e-12

    def test_empty_graph_rejected(self):
        order = validate_order([["a"]])
        cg = merge_logs([InteractionLog("a", np.array([]), np.array([]))], 2, 2)
        g = build_pog(cg, build_rank_function(order), 1.0)
        with pytest.raises(EmptyGraphError):
            build_distribution(g, 1.0)


class TestSampler:
    def forced_graph(self):
        # one edge (0, 1) out of two items; item 0 is the only negative
        order = validate_order([["a"]])
        cg = merge_logs([InteractionLog("a", np.array([0]), np.array([1]))], 1, 2)
        return build_pog(cg, build_rank_function(order), 1.0)

    def test_forced_outcome(self):
        g = self.forced_graph()
        dist = build_distribution(g, 1.0)
        triples = sample_batch(dist, g, 50, substream(0, "sampler"))
        assert all((t.u, t.i, t.j) == (0, 1, 0) for t in triples)

    def test_same_seed_same_batches(self, rng):
        g, _, _, _ = make_graph(10, 12, {"a": 30, "b": 10}, 1.0, rng)
        s1 = TripleSampler(g, "pobpr", gamma=1.0)
        s2 = TripleSampler(g, "pobpr", gamma=1.0)
        b1 = s1.sample_batch(64, substream(7, "sampler"))
        b2 = s2.sample_batch(64, substream(7, "sampler"))
        assert [(t.u, t.i, t.j) for t in b1] == [(t.u, t.i, t.j) for t in b2]

    def test_empirical_pool_frequencies(self, rng):
        g, _, _, _ = make_graph(10, 15, {"a": 60, "b": 25, "c": 8}, 1.0, rng)
        sampler = TripleSampler(g, "pobpr", gamma=1.2)
        dist = sampler.distribution
        draws = dist.sample_ranks(100_000, substream(3, "sampler"))
        freq = np.bincount(draws, minlength=len(dist.ranks)) / len(draws)
        assert np.abs(freq - dist.probs).sum() < 0.01

    def test_negatives_never_collide(self, rng):
        g, _, _, _ = make_graph(8, 10, {"a": 25, "b": 10}, 1.0, rng)
        positives = g.user_positive_sets()
        sampler = TripleSampler(g, "pobpr", gamma=0.8)
        stream = substream(11, "sampler")
        for _ in range(20):
            for t in sampler.sample_batch(32, stream):
                assert t.j not in positives[t.u]
                assert t.i in positives[t.u]

    def test_uniform_mode_ignores_ranks(self, rng):
        g, _, _, _ = make_graph(10, 12, {"a": 40, "b": 10}, 1.0, rng)
        sampler = TripleSampler(g, "uniform")
        triples = sampler.sample_batch(3000, substream(5, "sampler"))
        # high-rank pairs appear at their edge frequency, not oversampled
        pair_set = {(t.u, t.i) for t in triples}
        assert pair_set <= set(
            zip(g.edge_users.tolist(), g.edge_items.tolist())
        )

    def test_saturated_user_excluded_with_warning(self, caplog):
        order = validate_order([["a"]])
        logs = [InteractionLog("a", np.array([0, 0, 1]), np.array([0, 1, 0]))]
        cg = merge_logs(logs, 2, 2)
        g = build_pog(cg, build_rank_function(order), 1.0)
        with caplog.at_level(logging.WARNING):
            sampler = TripleSampler(g, "pobpr", gamma=1.0)
        assert "interacted with every item" in caplog.text
        triples = sampler.sample_batch(40, substream(0, "sampler"))
        assert all(t.u == 1 for t in triples)
