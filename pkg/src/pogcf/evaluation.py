"""Holdout splitting and full-ranking top-K evaluation.

Every non-training item is ranked for every evaluated user (no sampled
negatives); the mask is the union of the user's training items across all
behaviors, so one ranked list serves every behavior's metrics.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidFractionError, MissingTimestampsError
from .graph import InteractionLog
from .model import PropagatedEmbeddings
from .rng import substream

log = logging.getLogger(__name__)

_USER_CHUNK = 1024


@dataclass(frozen=True)
class SplitSpec:
    """Holdout protocol: per user, per behavior."""

    mode: str = "random"  # random | temporal
    test_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("random", "temporal"):
            raise InvalidFractionError(f"unknown split mode {self.mode!r}")
        if not 0.0 < self.test_fraction < 1.0:
            raise InvalidFractionError(
                f"test_fraction must lie in (0, 1), got {self.test_fraction}"
            )


def split(
    logs: list[InteractionLog], spec: SplitSpec
) -> tuple[list[InteractionLog], list[InteractionLog]]:
    """Hold out ``floor(fraction * n)`` of each user's interactions per behavior.

    Random mode draws the holdout uniformly; temporal mode holds out the
    latest interactions by timestamp. Logs are deduplicated first so an
    item never lands on both sides.
    """
    rng = substream(spec.seed, "split")
    train_logs, test_logs = [], []
    for raw in logs:
        d = raw.deduplicated()
        if spec.mode == "temporal" and d.times is None and len(d):
            raise MissingTimestampsError(
                f"behavior {d.behavior!r} has no timestamps for a temporal split"
            )
        in_test = np.zeros(len(d), dtype=bool)
        by_user: dict[int, list[int]] = {}
        for idx, u in enumerate(d.users.tolist()):
            by_user.setdefault(u, []).append(idx)
        for u in sorted(by_user):
            rows = np.array(by_user[u])
            n_test = int(spec.test_fraction * len(rows))
            if n_test == 0:
                continue
            if spec.mode == "random":
                chosen = rng.choice(rows, size=n_test, replace=False)
            else:
                # ties in timestamp break on item index so the split is stable
                order = np.lexsort((d.items[rows], d.times[rows]))
                chosen = rows[order[-n_test:]]
            in_test[chosen] = True
        train_logs.append(
            InteractionLog(d.behavior, d.users[~in_test], d.items[~in_test],
                           d.times[~in_test] if d.times is not None else None)
        )
        test_logs.append(
            InteractionLog(d.behavior, d.users[in_test], d.items[in_test],
                           d.times[in_test] if d.times is not None else None)
        )
    return train_logs, test_logs


def recall_at_k(ranked: list[int], test: set[int], k: int) -> float | None:
    """Fraction of test items retrieved in the top k; None if no test items."""
    if not test:
        return None
    hits = sum(1 for item in ranked[:k] if item in test)
    return hits / len(test)


def ndcg_at_k(ranked: list[int], test: set[int], k: int) -> float | None:
    """Binary-gain NDCG with the usual 1/log2(pos+1) discount."""
    if not test:
        return None
    dcg = 0.0
    for pos, item in enumerate(ranked[:k], start=1):
        if item in test:
            dcg += 1.0 / math.log2(pos + 1)
    idcg = sum(1.0 / math.log2(pos + 1) for pos in range(1, min(len(test), k) + 1))
    return dcg / idcg


@dataclass
class EvalReport:
    """Per-behavior and mean Recall@K / NDCG@K plus run metadata."""

    per_behavior: dict[str, dict[str, dict[int, float]]]
    mean: dict[str, dict[int, float]]
    metadata: dict = field(default_factory=dict)

    def mean_metric(self, metric: str, k: int) -> float:
        return self.mean[metric][k]

    def to_json_dict(self) -> dict:
        return {
            "per_behavior": {
                b: {m: {str(k): v for k, v in ks.items()} for m, ks in d.items()}
                for b, d in self.per_behavior.items()
            },
            "mean": {m: {str(k): v for k, v in ks.items()} for m, ks in self.mean.items()},
            "metadata": self.metadata,
        }

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def tsv_lines(self) -> list[str]:
        lines = []
        for behavior in sorted(self.per_behavior):
            for metric in ("recall", "ndcg"):
                for k, v in sorted(self.per_behavior[behavior][metric].items()):
                    lines.append(f"{behavior}\t{metric}\t{k}\t{v!r}")
        for metric in ("recall", "ndcg"):
            for k, v in sorted(self.mean[metric].items()):
                lines.append(f"mean\t{metric}\t{k}\t{v!r}")
        return lines

    def write_tsv(self, path) -> None:
        header = "behavior\tmetric\tk\tvalue"
        hash_line = f"# config_hash={self.metadata.get('config_hash')}\tseed={self.metadata.get('seed')}"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(hash_line + "\n" + header + "\n")
            fh.write("\n".join(self.tsv_lines()) + "\n")


def _test_sets_by_behavior(
    test_logs: list[InteractionLog],
) -> dict[str, dict[int, set[int]]]:
    out: dict[str, dict[int, set[int]]] = {}
    for tl in test_logs:
        sets: dict[int, set[int]] = {}
        for u, i in zip(tl.users.tolist(), tl.items.tolist()):
            sets.setdefault(u, set()).add(i)
        out[tl.behavior] = sets
    return out


def evaluate(
    emb: PropagatedEmbeddings,
    train_logs: list[InteractionLog],
    test_logs: list[InteractionLog],
    ks: list[int],
    metadata: dict | None = None,
) -> EvalReport:
    """Full-ranking Recall@K / NDCG@K per behavior and their mean.

    For every user with test items in a behavior, all items except the
    user's all-behavior training items are ranked once; ties break on the
    lower item index. Users without any training interaction are dropped;
    behaviors without any evaluable user are excluded from the mean with a
    warning.
    """
    ks = sorted(set(ks))
    k_max = ks[-1]
    train_mask: dict[int, set[int]] = {}
    for tl in train_logs:
        for u, i in zip(tl.users.tolist(), tl.items.tolist()):
            train_mask.setdefault(u, set()).add(i)
    test_sets = _test_sets_by_behavior(test_logs)

    eligible = sorted(
        {u for sets in test_sets.values() for u in sets if train_mask.get(u)}
    )
    rankings: dict[int, list[int]] = {}
    for start in range(0, len(eligible), _USER_CHUNK):
        chunk = eligible[start : start + _USER_CHUNK]
        scores = emb.users[chunk] @ emb.items.T
        for row, u in enumerate(chunk):
            scores[row, list(train_mask[u])] = -np.inf
        ranked = np.argsort(-scores, kind="stable", axis=1)[:, :k_max]
        for row, u in enumerate(chunk):
            rankings[u] = ranked[row].tolist()

    per_behavior: dict[str, dict[str, dict[int, float]]] = {}
    counts: dict[str, int] = {}
    for behavior in sorted(test_sets):
        sums = {"recall": {k: 0.0 for k in ks}, "ndcg": {k: 0.0 for k in ks}}
        n_users = 0
        for u, items in test_sets[behavior].items():
            if u not in rankings or not items:
                continue
            n_users += 1
            for k in ks:
                sums["recall"][k] += recall_at_k(rankings[u], items, k)
                sums["ndcg"][k] += ndcg_at_k(rankings[u], items, k)
        counts[behavior] = n_users
        if n_users == 0:
            log.warning("behavior %r has no evaluable test users; excluded from mean",
                        behavior)
            continue
        per_behavior[behavior] = {
            m: {k: sums[m][k] / n_users for k in ks} for m in ("recall", "ndcg")
        }

    mean = {
        m: {
            k: (sum(d[m][k] for d in per_behavior.values()) / len(per_behavior))
            if per_behavior else float("nan")
            for k in ks
        }
        for m in ("recall", "ndcg")
    }
    meta = dict(metadata or {})
    meta["evaluated_users"] = counts
    return EvalReport(per_behavior, mean, meta)
