"""Splitting, ranking metrics, and the full-ranking evaluator."""

import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pogcf.errors import InvalidFractionError, MissingTimestampsError
from pogcf.evaluation import (
    EvalReport,
    SplitSpec,
    evaluate,
    ndcg_at_k,
    recall_at_k,
    split,
)
from pogcf.graph import InteractionLog
from pogcf.model import PropagatedEmbeddings


def log(behavior, pairs, times=None):
    users = np.array([p[0] for p in pairs], dtype=np.int64)
    items = np.array([p[1] for p in pairs], dtype=np.int64)
    return InteractionLog(behavior, users, items,
                          np.array(times, dtype=np.float64) if times else None)


def brute_force_metrics(scores, test, k):
    """Independent oracle: explicit sort, position-by-position counting."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    top = order[:k]
    hits = [i for i in top if i in test]
    recall = len(hits) / len(test)
    dcg = sum(1.0 / math.log2(pos + 2) for pos, i in enumerate(top) if i in test)
    idcg = sum(1.0 / math.log2(pos + 2) for pos in range(min(len(test), k)))
    return recall, dcg / idcg


class TestSplit:
    def test_floor_keeps_single_interaction_in_train(self):
        logs = [log("click", [(0, 0)])]
        train, test = split(logs, SplitSpec("random", 0.2, seed=1))
        assert len(train[0]) == 1 and len(test[0]) == 0

    def test_temporal_holds_out_latest(self):
        pairs = [(0, i) for i in range(10)]
        times = list(range(1, 11))
        logs = [log("click", pairs, times)]
        train, test = split(logs, SplitSpec("temporal", 0.2, seed=0))
        assert sorted(test[0].items.tolist()) == [8, 9]  # t=9 and t=10
        assert len(train[0]) == 8

    def test_fixed_seed_reproducible(self):
        logs = [log("click", [(0, i) for i in range(30)] + [(1, i) for i in range(12)])]
        spec = SplitSpec("random", 0.25, seed=9)
        a_train, a_test = split(logs, spec)
        b_train, b_test = split(logs, spec)
        assert a_test[0].items.tolist() == b_test[0].items.tolist()
        assert a_train[0].items.tolist() == b_train[0].items.tolist()

    def test_train_test_disjoint_and_complete(self):
        pairs = [(u, i) for u in range(4) for i in range(8)]
        logs = [log("click", pairs)]
        train, test = split(logs, SplitSpec("random", 0.5, seed=3))
        got = set(zip(train[0].users.tolist(), train[0].items.tolist()))
        held = set(zip(test[0].users.tolist(), test[0].items.tolist()))
        assert got | held == set(pairs)
        assert not got & held

    def test_bad_fraction(self):
        with pytest.raises(InvalidFractionError):
            SplitSpec("random", 0.0, seed=0)
        with pytest.raises(InvalidFractionError):
            SplitSpec("random", 1.0, seed=0)

    def test_temporal_without_timestamps(self):
        logs = [log("click", [(0, 0), (0, 1)])]
        with pytest.raises(MissingTimestampsError):
            split(logs, SplitSpec("temporal", 0.5, seed=0))


class TestMetrics:
    def test_recall_examples(self):
        assert recall_at_k([0, 1, 2], {0}, 20) == 1.0
        assert recall_at_k([0, 2, 3], {0, 9}, 3) == 0.5
        assert recall_at_k([5, 6], set(), 2) is None

    def test_ndcg_examples(self):
        assert ndcg_at_k([7, 1, 2], {7}, 5) == 1.0
        expected = math.log2(2) / math.log2(3)
        assert abs(ndcg_at_k([3, 7], {7}, 5) - expected) < 1e-12
        assert ndcg_at_k([1, 2, 3], {9}, 3) == 0.0

    def test_against_brute_force(self, rng):
        for _ in range(100):
            n = int(rng.integers(5, 60))
            scores = rng.normal(size=n)
            test = set(rng.choice(n, size=int(rng.integers(1, min(6, n))),
                                  replace=False).tolist())
            k = int(rng.integers(1, n + 4))
            order = np.lexsort((np.arange(n), -scores)).tolist()
            oracle_recall, oracle_ndcg = brute_force_metrics(scores, test, k)
            assert abs(recall_at_k(order, test, k) - oracle_recall) < 1e-12
            assert abs(ndcg_at_k(order, test, k) - oracle_ndcg) < 1e-12

    @given(st.floats(min_value=0.1, max_value=5.0),
           st.floats(min_value=-3.0, max_value=3.0))
    @settings(max_examples=50, deadline=None)
    def test_order_sufficiency_under_monotone_transform(self, scale, shift):
        rng = np.random.default_rng(5)
        scores = rng.normal(size=25)
        transformed = scale * scores + shift
        ranked_a = np.lexsort((np.arange(25), -scores)).tolist()
        ranked_b = np.lexsort((np.arange(25), -transformed)).tolist()
        assert ranked_a == ranked_b

    def test_perfect_iff_front_loaded(self, rng):
        test = {3, 5}
        assert ndcg_at_k([3, 5, 1, 2], test, 4) == 1.0
        assert ndcg_at_k([3, 1, 5, 2], test, 4) < 1.0


def oracle_embeddings(num_users, num_items, best):
    """Embeddings that score ``best[u]`` highest for every user."""
    users = np.zeros((num_users, num_users))
    items = np.full((num_items, num_users), -1.0)
    for u, i in best.items():
        users[u, u] = 1.0
        items[i, u] = 10.0
    return PropagatedEmbeddings(users, items)


class TestEvaluate:
    def test_oracle_embeddings_score_one(self):
        best = {0: 3, 1: 4, 2: 5}
        train_logs = [log("click", [(u, u) for u in range(3)])]
        test_logs = [log("click", [(u, i) for u, i in best.items()])]
        emb = oracle_embeddings(3, 6, best)
        report = evaluate(emb, train_logs, test_logs, [1, 20])
        for k in (1, 20):
            assert report.per_behavior["click"]["recall"][k] == 1.0
            assert report.per_behavior["click"]["ndcg"][k] == 1.0
            assert report.mean["recall"][k] == 1.0

    def test_random_embeddings_match_uniform_expectation(self):
        rng = np.random.default_rng(0)
        num_users, num_items, k = 400, 50, 10
        emb = PropagatedEmbeddings(rng.normal(size=(num_users, 8)),
                                   rng.normal(size=(num_items, 8)))
        train_logs = [log("click", [(u, 0) for u in range(num_users)])]
        test_logs = [log("click", [(u, 1 + u % (num_items - 1))
                                   for u in range(num_users)])]
        report = evaluate(emb, train_logs, test_logs, [k])
        # one test item among num_items-1 candidates: hit prob = k/(N-1)
        p = k / (num_items - 1)
        sigma = math.sqrt(p * (1 - p) / num_users)
        assert abs(report.per_behavior["click"]["recall"][k] - p) < 3 * sigma

    def test_tiny_instance_matches_brute_force(self, rng):
        num_users, num_items, k = 3, 6, 3
        emb = PropagatedEmbeddings(rng.normal(size=(num_users, 4)),
                                   rng.normal(size=(num_items, 4)))
        train_pairs = [(0, 0), (1, 1), (2, 2), (0, 3)]
        test_pairs = [(0, 1), (0, 2), (1, 4), (2, 5)]
        report = evaluate(
            emb, [log("click", train_pairs)], [log("click", test_pairs)], [k]
        )
        # independent evaluator: python sorts, explicit position counting
        recalls, ndcgs = [], []
        for u in range(num_users):
            mask = {i for uu, i in train_pairs if uu == u}
            test = {i for uu, i in test_pairs if uu == u}
            scores = (emb.users[u] @ emb.items.T).tolist()
            ranked = sorted(
                (i for i in range(num_items) if i not in mask),
                key=lambda i: (-scores[i], i),
            )
            hit_positions = [p for p, i in enumerate(ranked[:k], 1) if i in test]
            recalls.append(len(hit_positions) / len(test))
            dcg = sum(1 / math.log2(p + 1) for p in hit_positions)
            idcg = sum(1 / math.log2(p + 1)
                       for p in range(1, min(len(test), k) + 1))
            ndcgs.append(dcg / idcg)
        assert abs(report.per_behavior["click"]["recall"][k]
                   - sum(recalls) / num_users) < 1e-12
        assert abs(report.per_behavior["click"]["ndcg"][k]
                   - sum(ndcgs) / num_users) < 1e-12

    def test_mask_excludes_all_behavior_training_items(self, rng):
        emb = PropagatedEmbeddings(np.ones((1, 2)), np.ones((4, 2)))
        # item 0 trained under click, item 1 under buy; both masked everywhere
        train_logs = [log("click", [(0, 0)]), log("buy", [(0, 1)])]
        test_logs = [log("click", [(0, 2)]), log("buy", [(0, 3)])]
        report = evaluate(emb, train_logs, test_logs, [2])
        # candidates are only items 2 and 3: every test item must be found
        assert report.per_behavior["click"]["recall"][2] == 1.0
        assert report.per_behavior["buy"]["recall"][2] == 1.0

    def test_behavior_without_test_users_excluded(self, caplog):
        emb = PropagatedEmbeddings(np.ones((2, 2)), np.ones((3, 2)))
        train_logs = [log("click", [(0, 0)]), log("buy", [(0, 0)])]
        test_logs = [log("click", [(0, 1)]), log("buy", [])]
        with caplog.at_level(logging.WARNING):
            report = evaluate(emb, train_logs, test_logs, [1])
        assert "buy" not in report.per_behavior
        assert "no evaluable test users" in caplog.text
        assert report.mean["recall"][1] == report.per_behavior["click"]["recall"][1]

    def test_mean_is_arithmetic_mean(self, rng):
        emb = PropagatedEmbeddings(rng.normal(size=(4, 3)),
                                   rng.normal(size=(8, 3)))
        train_logs = [log("click", [(u, 0) for u in range(4)]),
                      log("buy", [(u, 1) for u in range(4)])]
        test_logs = [log("click", [(u, 2 + u) for u in range(4)]),
                     log("buy", [(u, 5 - u) for u in range(4)])]
        report = evaluate(emb, train_logs, test_logs, [3])
        for metric in ("recall", "ndcg"):
            values = [report.per_behavior[b][metric][3] for b in ("click", "buy")]
            assert abs(report.mean[metric][3] - sum(values) / 2) < 1e-12

    def test_user_without_training_interactions_dropped(self):
        emb = PropagatedEmbeddings(np.ones((2, 2)), np.ones((3, 2)))
        train_logs = [log("click", [(0, 0)])]
        test_logs = [log("click", [(0, 1), (1, 2)])]  # user 1 never trained
        report = evaluate(emb, train_logs, test_logs, [1])
        assert report.metadata["evaluated_users"]["click"] == 1


class TestReportSerialization:
    def make_report(self):
        return EvalReport(
            per_behavior={"click": {"recall": {20: 0.5}, "ndcg": {20: 0.25}}},
            mean={"recall": {20: 0.5}, "ndcg": {20: 0.25}},
            metadata={"config_hash": "abc", "seed": 1, "dataset": "toy",
                      "timestamp": None},
        )

    def test_json_round_trip(self, tmp_path):
        import json

        report = self.make_report()
        path = tmp_path / "report.json"
        report.write_json(path)
        loaded = json.loads(path.read_text())
        assert loaded["mean"]["ndcg"]["20"] == 0.25
        assert loaded["metadata"]["config_hash"] == "abc"

    def test_tsv_layout(self, tmp_path):
        report = self.make_report()
        path = tmp_path / "report.tsv"
        report.write_tsv(path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# config_hash=abc")
        assert lines[1] == "behavior\tmetric\tk\tvalue"
        assert "click\trecall\t20\t0.5" in lines
        assert "mean\tndcg\t20\t0.25" in lines
