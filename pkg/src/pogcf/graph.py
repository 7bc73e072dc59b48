"""Builds the rank-weighted interaction graph from per-behavior logs.

Per-behavior logs are merged into one bipartite graph whose edges carry the
set of behaviors observed between a user and an item; each edge is then
weighted by ``rank(combination) ** tau`` and the edges are pooled by
combination rank for the sampler.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    AllFilteredError,
    DuplicateBehaviorLogError,
    IndexOutOfRangeError,
    SnapshotFormatError,
    UnrankedCombinationError,
)
from .order import Combination, CombinationRank

POG_MAGIC = b"POGS"
POG_VERSION = 1
_EDGE_DTYPE = np.dtype([("u", "<u4"), ("i", "<u4"), ("rank", "<u4"), ("w", "<f8")])


@dataclass
class InteractionLog:
    """Raw (user, item) interaction pairs for one behavior.

    Duplicates are permitted; they collapse when the graph is built.
    ``times`` is optional and only consulted by the temporal splitter.
    """

    behavior: str
    users: np.ndarray
    items: np.ndarray
    times: np.ndarray | None = None

    def __post_init__(self):
        self.users = np.asarray(self.users, dtype=np.int64)
        self.items = np.asarray(self.items, dtype=np.int64)
        if self.times is not None:
            self.times = np.asarray(self.times, dtype=np.float64)
            if self.times.shape != self.users.shape:
                raise ValueError("times must align with pairs")
        if self.users.shape != self.items.shape:
            raise ValueError("users and items must align")

    def __len__(self) -> int:
        return len(self.users)

    def deduplicated(self) -> "InteractionLog":
        """Collapse repeated pairs; the latest timestamp survives."""
        if len(self) == 0:
            return InteractionLog(self.behavior, self.users, self.items, self.times)
        key = np.stack([self.users, self.items], axis=1)
        uniq, inverse = np.unique(key, axis=0, return_inverse=True)
        times = None
        if self.times is not None:
            times = np.full(len(uniq), -np.inf)
            np.maximum.at(times, inverse, self.times)
        return InteractionLog(self.behavior, uniq[:, 0], uniq[:, 1], times)


@dataclass
class CombinationGraph:
    """Bipartite graph whose edges carry behavior combinations.

    Combinations are stored as bitmasks over ``behaviors`` to keep large
    logs cheap; ``combination`` decodes one edge on demand.
    """

    num_users: int
    num_items: int
    behaviors: tuple[str, ...]
    edge_masks: dict[tuple[int, int], int]

    def combination(self, u: int, i: int) -> Combination:
        mask = self.edge_masks[(u, i)]
        return frozenset(b for k, b in enumerate(self.behaviors) if mask >> k & 1)

    def edges(self) -> Iterator[tuple[tuple[int, int], Combination]]:
        for pair, mask in self.edge_masks.items():
            yield pair, frozenset(
                b for k, b in enumerate(self.behaviors) if mask >> k & 1
            )

    def observed_combinations(self) -> set[Combination]:
        masks = set(self.edge_masks.values())
        return {
            frozenset(b for k, b in enumerate(self.behaviors) if mask >> k & 1)
            for mask in masks
        }

    def __len__(self) -> int:
        return len(self.edge_masks)


def merge_logs(
    logs: Sequence[InteractionLog], num_users: int, num_items: int
) -> CombinationGraph:
    """Union per-behavior logs into a combination graph.

    Every pair that appears in at least one log yields one edge whose
    combination is the set of behaviors that link it. Repeated pairs within
    a log collapse.
    """
    names = [log.behavior for log in logs]
    if len(set(names)) != len(names):
        raise DuplicateBehaviorLogError(f"duplicate behavior logs in {names}")
    masks: dict[tuple[int, int], int] = {}
    for bit, log in enumerate(logs):
        if len(log) == 0:
            continue
        if log.users.min() < 0 or log.users.max() >= num_users:
            raise IndexOutOfRangeError(
                f"user index outside [0, {num_users}) in behavior {log.behavior!r}"
            )
        if log.items.min() < 0 or log.items.max() >= num_items:
            raise IndexOutOfRangeError(
                f"item index outside [0, {num_items}) in behavior {log.behavior!r}"
            )
        flag = 1 << bit
        for u, i in zip(log.users.tolist(), log.items.tolist()):
            key = (u, i)
            masks[key] = masks.get(key, 0) | flag
    return CombinationGraph(num_users, num_items, tuple(names), masks)


@dataclass
class PogGraph:
    """Sparse weighted bipartite graph with rank pools.

    Edge arrays are sorted by (user, item); ``pools`` maps a combination
    rank to the indices of its edges. Weights equal ``rank ** tau``.
    """

    num_users: int
    num_items: int
    tau: float
    edge_users: np.ndarray
    edge_items: np.ndarray
    edge_ranks: np.ndarray
    edge_weights: np.ndarray
    user_wdeg: np.ndarray = field(repr=False)
    item_wdeg: np.ndarray = field(repr=False)
    pools: dict[int, np.ndarray] = field(repr=False, default_factory=dict)

    @property
    def num_edges(self) -> int:
        return len(self.edge_users)

    def pool_pairs(self, rank: int) -> np.ndarray:
        """(n, 2) array of the (user, item) pairs pooled under ``rank``."""
        idx = self.pools[rank]
        return np.stack([self.edge_users[idx], self.edge_items[idx]], axis=1)

    def user_positive_sets(self) -> list[set[int]]:
        """Per-user sets of items touched by any behavior."""
        pos: list[set[int]] = [set() for _ in range(self.num_users)]
        for u, i in zip(self.edge_users.tolist(), self.edge_items.tolist()):
            pos[u].add(i)
        return pos


def build_pog(cg: CombinationGraph, ranks: CombinationRank, tau: float) -> PogGraph:
    """Weight every edge by its combination rank raised to ``tau``.

    Raises UnrankedCombinationError if the graph contains a combination the
    rank table does not cover (possible when ranks were built over observed
    combinations of a different dataset).
    """
    if tau < 0:
        raise ValueError("tau must be non-negative")
    mask_rank: dict[int, int] = {}
    for mask in set(cg.edge_masks.values()):
        combo = frozenset(
            b for k, b in enumerate(cg.behaviors) if mask >> k & 1
        )
        if combo not in ranks.table:
            raise UnrankedCombinationError(f"combination {sorted(combo)} has no rank")
        mask_rank[mask] = ranks.table[combo]

    n = len(cg.edge_masks)
    us = np.empty(n, dtype=np.int64)
    its = np.empty(n, dtype=np.int64)
    rks = np.empty(n, dtype=np.int64)
    for j, ((u, i), mask) in enumerate(cg.edge_masks.items()):
        us[j], its[j], rks[j] = u, i, mask_rank[mask]
    order = np.lexsort((its, us))
    us, its, rks = us[order], its[order], rks[order]
    weights = rks.astype(np.float64) ** tau

    user_wdeg = np.zeros(cg.num_users)
    item_wdeg = np.zeros(cg.num_items)
    np.add.at(user_wdeg, us, weights)
    np.add.at(item_wdeg, its, weights)

    pools = {
        int(rank): np.flatnonzero(rks == rank) for rank in np.unique(rks)
    }
    return PogGraph(
        cg.num_users, cg.num_items, float(tau), us, its, rks, weights,
        user_wdeg, item_wdeg, pools,
    )


@dataclass
class IndexRemap:
    """Maps surviving original ids to contiguous indices."""

    user_ids: np.ndarray
    item_ids: np.ndarray

    @property
    def num_users(self) -> int:
        return len(self.user_ids)

    @property
    def num_items(self) -> int:
        return len(self.item_ids)


def filter_min_interactions(
    logs: Sequence[InteractionLog], min_count: int
) -> tuple[list[InteractionLog], IndexRemap]:
    """Iteratively drop users/items with fewer than ``min_count`` interactions.

    Counts are taken over deduplicated pairs summed across behaviors.
    Removing a user lowers its items' counts, so filtering repeats until a
    fixpoint; surviving ids are remapped to contiguous indices in ascending
    original order.
    """
    if min_count < 0:
        raise ValueError("min_count must be non-negative")
    deduped = [log.deduplicated() for log in logs]
    all_u = np.concatenate([d.users for d in deduped]) if deduped else np.array([], dtype=np.int64)
    all_i = np.concatenate([d.items for d in deduped]) if deduped else np.array([], dtype=np.int64)
    if len(all_u) == 0:
        if min_count > 0:
            raise AllFilteredError("no interactions present")
        empty = np.array([], dtype=np.int64)
        return list(deduped), IndexRemap(empty, empty)

    uniq_u, u_inv = np.unique(all_u, return_inverse=True)
    uniq_i, i_inv = np.unique(all_i, return_inverse=True)
    alive = np.ones(len(all_u), dtype=bool)
    while True:
        u_counts = np.bincount(u_inv[alive], minlength=len(uniq_u))
        i_counts = np.bincount(i_inv[alive], minlength=len(uniq_i))
        dead = (u_counts < min_count)[u_inv] | (i_counts < min_count)[i_inv]
        next_alive = alive & ~dead
        if not next_alive.any():
            raise AllFilteredError(f"min_count={min_count} removed every interaction")
        if np.array_equal(next_alive, alive):
            break
        alive = next_alive

    u_map = np.full(len(uniq_u), -1, dtype=np.int64)
    i_map = np.full(len(uniq_i), -1, dtype=np.int64)
    kept_u = np.unique(u_inv[alive])
    kept_i = np.unique(i_inv[alive])
    u_map[kept_u] = np.arange(len(kept_u))
    i_map[kept_i] = np.arange(len(kept_i))

    out: list[InteractionLog] = []
    offset = 0
    for d in deduped:
        n = len(d)
        keep = alive[offset : offset + n]
        users = u_map[u_inv[offset : offset + n][keep]]
        items = i_map[i_inv[offset : offset + n][keep]]
        times = d.times[keep] if d.times is not None else None
        out.append(InteractionLog(d.behavior, users, items, times))
        offset += n
    return out, IndexRemap(uniq_u[kept_u], uniq_i[kept_i])


# snapshot io -----------------------------------------------------------------

def save_pog(g: PogGraph, path) -> None:
    """Write the graph to a versioned little-endian binary snapshot."""
    header = POG_MAGIC + struct.pack(
        "<IQQdQ", POG_VERSION, g.num_users, g.num_items, g.tau, g.num_edges
    )
    records = np.empty(g.num_edges, dtype=_EDGE_DTYPE)
    records["u"] = g.edge_users
    records["i"] = g.edge_items
    records["rank"] = g.edge_ranks
    records["w"] = g.edge_weights
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(records.tobytes())


def load_pog(path) -> PogGraph:
    """Read a snapshot written by :func:`save_pog`."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != POG_MAGIC:
            raise SnapshotFormatError(f"{path}: bad magic {magic!r}")
        version, m, n, tau, n_edges = struct.unpack("<IQQdQ", fh.read(36))
        if version != POG_VERSION:
            raise SnapshotFormatError(f"{path}: unsupported version {version}")
        records = np.frombuffer(fh.read(n_edges * _EDGE_DTYPE.itemsize), dtype=_EDGE_DTYPE)
        if len(records) != n_edges:
            raise SnapshotFormatError(f"{path}: truncated edge section")
    us = records["u"].astype(np.int64)
    its = records["i"].astype(np.int64)
    rks = records["rank"].astype(np.int64)
    ws = records["w"].astype(np.float64)
    user_wdeg = np.zeros(m)
    item_wdeg = np.zeros(n)
    np.add.at(user_wdeg, us, ws)
    np.add.at(item_wdeg, its, ws)
    pools = {int(r): np.flatnonzero(rks == r) for r in np.unique(rks)}
    return PogGraph(int(m), int(n), float(tau), us, its, rks, ws,
                    user_wdeg, item_wdeg, pools)


def write_edge_tsv(g: PogGraph, path) -> None:
    """Human-readable edge list: ``user<TAB>item<TAB>weight``."""
    with open(path, "w", encoding="utf-8") as fh:
        for u, i, w in zip(g.edge_users.tolist(), g.edge_items.tolist(),
                           g.edge_weights.tolist()):
            fh.write(f"{u}\t{i}\t{w!r}\n")


def write_rank_table_tsv(ranks: CombinationRank, tau: float, path) -> None:
    """Rank table dump: ``combination<TAB>rank<TAB>weight``."""
    from .order import combination_label

    with open(path, "w", encoding="utf-8") as fh:
        for rank, cls in enumerate(ranks.classes, start=1):
            for combo in cls:
                label = combination_label(combo, ranks.order)
                fh.write(f"{label}\t{rank}\t{float(rank) ** tau!r}\n")
