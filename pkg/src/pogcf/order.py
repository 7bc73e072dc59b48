"""Graded partial order over behaviors and ranks for behavior combinations.

Behaviors are declared in levels of ascending importance; behaviors in the
same level are incomparable, and every behavior in level k+1 dominates every
behavior in level k. Each non-empty subset of behaviors ("combination") is
then ranked by counting, per level, how many of its members sit there and
comparing those counts from the most important level downward. Combinations
whose per-level counts coincide are incomparable and share one rank, so the
ranks form a gapless sequence 1..n over the equivalence classes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from itertools import combinations as subsets_of_size
from typing import Iterable, Mapping, Sequence

from .errors import (
    DuplicateBehaviorError,
    EmptyLevelError,
    EmptyOrderError,
    EmptyUniverseError,
    UnknownBehaviorError,
)

Combination = frozenset[str]


class Comparison(enum.Enum):
    """Outcome of comparing two behavior combinations."""

    LESS = -1
    EQUAL = 0
    GREATER = 1
    INCOMPARABLE = 2


@dataclass(frozen=True)
class BehaviorOrder:
    """Declared behaviors with their level index (1 = least important).

    ``behaviors`` lists names in ascending level order (declaration order
    within a level); ``levels`` holds the level sets themselves.
    """

    behaviors: tuple[str, ...]
    levels: tuple[frozenset[str], ...]
    level_of: Mapping[str, int] = field(repr=False)

    @property
    def max_rank(self) -> int:
        return len(self.levels)

    def behavior_rank(self, name: str) -> int:
        """Level index of a single behavior (its rank in the order)."""
        try:
            return self.level_of[name]
        except KeyError:
            raise UnknownBehaviorError(f"unknown behavior {name!r}") from None

    def check_members(self, combo: Iterable[str]) -> Combination:
        members = frozenset(combo)
        if not members:
            raise ValueError("behavior combination must be non-empty")
        for name in members:
            if name not in self.level_of:
                raise UnknownBehaviorError(f"unknown behavior {name!r}")
        return members


def validate_order(levels: Sequence[Sequence[str]]) -> BehaviorOrder:
    """Build a BehaviorOrder from a raw level declaration.

    ``levels`` is a list of lists of behavior names in ascending importance.
    Rejects empty declarations, empty levels, and repeated names.
    """
    if len(levels) == 0:
        raise EmptyOrderError("at least one level is required")
    level_of: dict[str, int] = {}
    ordered: list[str] = []
    level_sets: list[frozenset[str]] = []
    for idx, level in enumerate(levels, start=1):
        names = list(level)
        if not names:
            raise EmptyLevelError(f"level {idx} is empty")
        for name in names:
            if name in level_of:
                raise DuplicateBehaviorError(f"behavior {name!r} declared twice")
            level_of[name] = idx
            ordered.append(name)
        level_sets.append(frozenset(names))
    return BehaviorOrder(tuple(ordered), tuple(level_sets), level_of)


def rank_count_vector(combo: Iterable[str], order: BehaviorOrder) -> tuple[int, ...]:
    """Per-level member counts of ``combo``, most important level first."""
    members = order.check_members(combo)
    counts = [0] * order.max_rank
    for name in members:
        counts[order.max_rank - order.level_of[name]] += 1
    return tuple(counts)


def compare_combinations(
    a: Iterable[str], b: Iterable[str], order: BehaviorOrder
) -> Comparison:
    """Compare two combinations by descending per-level count comparison.

    Equal sets compare EQUAL. Otherwise counts are compared level by level
    from the most important level down; the first strict difference decides.
    Distinct sets with identical counts at every level are INCOMPARABLE.
    """
    ca = order.check_members(a)
    cb = order.check_members(b)
    if ca == cb:
        return Comparison.EQUAL
    k = order.max_rank
    while k >= 1:
        fa = sum(1 for name in ca if order.level_of[name] == k)
        fb = sum(1 for name in cb if order.level_of[name] == k)
        if fa < fb:
            return Comparison.LESS
        if fb < fa:
            return Comparison.GREATER
        k -= 1
    return Comparison.INCOMPARABLE


@dataclass(frozen=True)
class CombinationRank:
    """Rank table over a universe of behavior combinations.

    Ranks run 1..n with no gaps; combinations share a rank exactly when
    their rank-count vectors are identical. ``classes`` lists the
    equivalence classes in ascending rank order.
    """

    order: BehaviorOrder
    table: Mapping[Combination, int]
    classes: tuple[tuple[Combination, ...], ...]

    @property
    def num_ranks(self) -> int:
        return len(self.classes)

    def rank_of(self, combo: Iterable[str]) -> int:
        members = self.order.check_members(combo)
        return self.table[members]

    def __contains__(self, combo: object) -> bool:
        return frozenset(combo) in self.table  # type: ignore[arg-type]


def all_nonempty_subsets(order: BehaviorOrder) -> list[Combination]:
    """Every non-empty subset of the declared behavior set (2^K - 1 of them)."""
    out: list[Combination] = []
    for size in range(1, len(order.behaviors) + 1):
        for combo in subsets_of_size(order.behaviors, size):
            out.append(frozenset(combo))
    return out


def build_rank_function(
    order: BehaviorOrder, universe: Iterable[Iterable[str]] | None = None
) -> CombinationRank:
    """Assign consecutive ranks 1..n to the combinations in ``universe``.

    Combinations are grouped by rank-count vector and the groups sorted
    lexicographically on those vectors (most important level first), which
    realizes the count-comparison order. ``universe`` defaults to all
    non-empty subsets of the behavior set.
    """
    combos = (
        all_nonempty_subsets(order)
        if universe is None
        else [order.check_members(c) for c in universe]
    )
    if not combos:
        raise EmptyUniverseError("combination universe is empty")
    groups: dict[tuple[int, ...], list[Combination]] = {}
    for combo in set(combos):
        groups.setdefault(rank_count_vector(combo, order), []).append(combo)
    table: dict[Combination, int] = {}
    classes: list[tuple[Combination, ...]] = []
    for rank, vec in enumerate(sorted(groups), start=1):
        cls = tuple(sorted(groups[vec], key=sorted))
        classes.append(cls)
        for combo in cls:
            table[combo] = rank
    return CombinationRank(order, table, tuple(classes))


def combination_label(combo: Iterable[str], order: BehaviorOrder) -> str:
    """Canonical display string for a combination ("click+buy")."""
    members = order.check_members(combo)
    return "+".join(n for n in order.behaviors if n in members)
