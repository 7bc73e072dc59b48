"""Planted-preference synthetic dataset with nested behaviors.

Items form groups and, within each group, sub-clusters. A user's clicks
spread over their whole group (plus uniform noise), so clicks reveal only
the coarse preference; favors concentrate on one sub-cluster and buys on a
subset of the favors. Deep behaviors therefore carry a strictly finer
preference signal than clicks, which is the regime rank-weighted edges and
rank-aware sampling are meant to exploit. Timestamps record draw order.
"""

from __future__ import annotations

import os

import numpy as np

from .datasets import write_log_tsv
from .graph import InteractionLog
from .rng import substream

BEHAVIOR_LEVELS = [["click"], ["favor"], ["buy"]]


def make_synthetic(
    num_users: int = 200,
    num_items: int = 300,
    num_groups: int = 10,
    sub_clusters: int = 3,
    clicks_per_user: int = 110,
    in_group_prob: float = 0.4,
    favors_per_user: int = 8,
    buy_rate: float = 0.6,
    seed: int = 0,
) -> dict[str, InteractionLog]:
    """Generate the three nested behavior logs keyed by behavior name."""
    rng = substream(seed, "synthetic")
    item_group = np.arange(num_items) % num_groups

    clicks_u, clicks_i = [], []
    favors_u, favors_i = [], []
    buys_u, buys_i = [], []
    for u in range(num_users):
        group = u % num_groups
        own = np.flatnonzero(item_group == group)
        sub_size = max(1, len(own) // sub_clusters)
        sub = (u // num_groups) % sub_clusters
        sub_items = own[sub * sub_size : (sub + 1) * sub_size]

        n_in = int(round(clicks_per_user * in_group_prob))
        clicked = set(rng.choice(own, size=n_in, replace=True).tolist())
        clicked.update(rng.integers(num_items, size=clicks_per_user - n_in).tolist())
        clicked = sorted(clicked)
        clicks_u.extend([u] * len(clicked))
        clicks_i.extend(clicked)

        n_fav = min(favors_per_user, len(sub_items))
        favored = sorted(rng.choice(sub_items, size=n_fav, replace=False).tolist())
        favors_u.extend([u] * len(favored))
        favors_i.extend(favored)

        n_buy = int(round(buy_rate * len(favored)))
        bought = sorted(rng.choice(favored, size=n_buy, replace=False).tolist()) \
            if n_buy else []
        buys_u.extend([u] * len(bought))
        buys_i.extend(bought)

    def log(name, us, its):
        return InteractionLog(
            name, np.array(us, dtype=np.int64), np.array(its, dtype=np.int64),
            np.arange(len(us), dtype=np.float64),
        )

    return {
        "click": log("click", clicks_u, clicks_i),
        "favor": log("favor", favors_u, favors_i),
        "buy": log("buy", buys_u, buys_i),
    }


def write_synthetic(out_dir, seed: int = 0, **kwargs) -> dict[str, str]:
    """Write the synthetic logs as TSVs; returns behavior -> path."""
    os.makedirs(out_dir, exist_ok=True)
    logs = make_synthetic(seed=seed, **kwargs)
    paths = {}
    for behavior, log in logs.items():
        path = os.path.join(out_dir, f"{behavior}.tsv")
        write_log_tsv(log, path)
        paths[behavior] = path
    return paths
