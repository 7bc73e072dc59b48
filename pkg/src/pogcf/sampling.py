"""Training-triple samplers.

The partial-order sampler draws a combination rank from a multinomial whose
weights are ``rank ** gamma * pool_size``, then a positive pair uniformly
from that rank's pool, then a negative item uniformly among items the user
never touched under any behavior. The uniform sampler ignores ranks and
draws positives uniformly over all edges.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyGraphError, NoNegativeAvailableError
from .graph import PogGraph

log = logging.getLogger(__name__)


@dataclass
class TrainTriple:
    """A (user, positive item, negative item) training example."""

    u: int
    i: int
    j: int


@dataclass
class CombinationDistribution:
    """Multinomial over combination ranks, proportional to rank^gamma * count."""

    ranks: np.ndarray
    counts: np.ndarray
    gamma: float
    probs: np.ndarray = field(init=False)
    cumulative: np.ndarray = field(init=False)

    def __post_init__(self):
        self.ranks = np.asarray(self.ranks, dtype=np.int64)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if len(self.ranks) == 0:
            raise EmptyGraphError("no combination pools to sample from")
        if (self.counts <= 0).any():
            raise ValueError("pool counts must be positive")
        weights = self.ranks.astype(np.float64) ** self.gamma * self.counts
        self.probs = weights / weights.sum()
        self.cumulative = np.cumsum(self.probs)

    def sample_ranks(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """Indices into ``ranks`` drawn from the multinomial."""
        draws = rng.random(size)
        return np.searchsorted(self.cumulative, draws, side="right").clip(
            0, len(self.ranks) - 1
        )


def build_distribution(g: PogGraph, gamma: float) -> CombinationDistribution:
    """Combination distribution over the graph's non-empty rank pools."""
    if g.num_edges == 0:
        raise EmptyGraphError("graph has no edges")
    ranks = sorted(g.pools)
    counts = [len(g.pools[r]) for r in ranks]
    return CombinationDistribution(np.array(ranks), np.array(counts), gamma)


class TripleSampler:
    """Draws training triples from a graph under a given positive-pair law.

    ``mode`` is "pobpr" (rank multinomial then uniform within pool) or
    "uniform" (uniform over all edges). Users who interacted with every
    item admit no negative; their pairs are excluded up front with a
    warning, mirroring how they would stall rejection sampling. ``debug``
    re-checks every emitted batch against the positive sets.
    """

    def __init__(self, g: PogGraph, mode: str = "pobpr", gamma: float = 1.0,
                 debug: bool = False):
        if mode not in ("pobpr", "uniform"):
            raise ValueError(f"unknown sampler mode {mode!r}")
        if g.num_edges == 0:
            raise EmptyGraphError("graph has no edges")
        self.graph = g
        self.mode = mode
        self.debug = debug
        self.num_items = g.num_items
        self.positives = g.user_positive_sets()

        saturated = {u for u, pos in enumerate(self.positives) if len(pos) >= g.num_items}
        if saturated:
            log.warning(
                "%d user(s) interacted with every item; excluded from sampling",
                len(saturated),
            )
        keep = ~np.isin(g.edge_users, np.fromiter(saturated, dtype=np.int64, count=len(saturated))) \
            if saturated else np.ones(g.num_edges, dtype=bool)
        if not keep.any():
            raise NoNegativeAvailableError("every user has interacted with every item")

        self.pool_pairs: list[np.ndarray] = []
        ranks, counts = [], []
        for rank in sorted(g.pools):
            idx = g.pools[rank][keep[g.pools[rank]]]
            if len(idx) == 0:
                continue
            self.pool_pairs.append(
                np.stack([g.edge_users[idx], g.edge_items[idx]], axis=1)
            )
            ranks.append(rank)
            counts.append(len(idx))
        self.distribution = CombinationDistribution(
            np.array(ranks), np.array(counts), gamma
        )
        all_idx = np.flatnonzero(keep)
        self.all_pairs = np.stack(
            [g.edge_users[all_idx], g.edge_items[all_idx]], axis=1
        )

    def sample_negative(self, u: int, rng: np.random.Generator) -> int:
        """Uniform item the user never touched, by rejection."""
        pos = self.positives[u]
        while True:
            j = int(rng.integers(self.num_items))
            if j not in pos:
                return j

    def sample_batch(self, batch_size: int, rng: np.random.Generator) -> list[TrainTriple]:
        if self.mode == "pobpr":
            pool_idx = self.distribution.sample_ranks(batch_size, rng)
            triples = []
            for h in pool_idx:
                pairs = self.pool_pairs[h]
                u, i = pairs[int(rng.integers(len(pairs)))]
                triples.append(TrainTriple(int(u), int(i), self.sample_negative(int(u), rng)))
        else:
            rows = rng.integers(len(self.all_pairs), size=batch_size)
            triples = [
                TrainTriple(int(u), int(i), self.sample_negative(int(u), rng))
                for u, i in self.all_pairs[rows]
            ]
        if self.debug:
            for t in triples:
                assert t.i in self.positives[t.u]
                assert t.j not in self.positives[t.u]
        return triples


def sample_batch(
    dist: CombinationDistribution,
    g: PogGraph,
    batch_size: int,
    rng: np.random.Generator,
) -> list[TrainTriple]:
    """One-shot partial-order batch draw; see :class:`TripleSampler`."""
    sampler = TripleSampler(g, mode="pobpr", gamma=dist.gamma)
    return sampler.sample_batch(batch_size, rng)


class BehaviorSampler:
    """Per-behavior positive sampler for the weighted multi-task objective.

    Positives come from one behavior's edges; negatives are still drawn
    against the union of all behaviors.
    """

    def __init__(self, behavior_pairs: dict[str, np.ndarray],
                 positives: list[set[int]], num_items: int):
        self.behavior_pairs = {b: p for b, p in behavior_pairs.items() if len(p)}
        if not self.behavior_pairs:
            raise EmptyGraphError("no behavior has any edges")
        self.positives = positives
        self.num_items = num_items

    def sample_batch(
        self, behavior: str, batch_size: int, rng: np.random.Generator
    ) -> list[TrainTriple]:
        pairs = self.behavior_pairs[behavior]
        rows = rng.integers(len(pairs), size=batch_size)
        out = []
        for u, i in pairs[rows]:
            u = int(u)
            pos = self.positives[u]
            if len(pos) >= self.num_items:
                continue
            j = int(rng.integers(self.num_items))
            while j in pos:
                j = int(rng.integers(self.num_items))
            out.append(TrainTriple(u, int(i), j))
        return out
