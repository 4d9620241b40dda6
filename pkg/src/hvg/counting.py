"""Winning/losing coalition counts and balance checks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict

import numpy as np

from hvg._local import DEFAULT_VOTER_CAP, check_local_cap, local_cap, node_pass
from hvg.errors import CapExceededError, DomainError
from hvg.model import GameTree

__all__ = [
    "CountPair",
    "CountTable",
    "count_naive",
    "count_recursive",
    "is_balanced_exhaustive",
    "is_balanced_local",
    "majority_counts_closed_form",
]


@dataclass(frozen=True)
class CountPair:
    """Numbers of winning and losing coalitions of one (sub)game."""

    wins: int
    losses: int

    def __iter__(self):
        yield self.wins
        yield self.losses

    def __getitem__(self, i):
        return (self.wins, self.losses)[i]

    @property
    def total(self) -> int:
        return self.wins + self.losses


CountTable = Dict[str, CountPair]

LEAF = CountPair(1, 1)


def _check_voter_cap(tree: GameTree, limit: int | None) -> int:
    limit = DEFAULT_VOTER_CAP if limit is None else limit
    n = len(tree.voters)
    if n > limit:
        raise CapExceededError(f"{n} voters exceed the enumeration cap of {limit}")
    return n


def count_naive(game: GameTree, limit: int | None = None) -> CountPair:
    """Count by evaluating the implicit characteristic function on all 2**n coalitions."""
    n = _check_voter_cap(game, limit)
    wins = int(np.count_nonzero(game.implicit_table()))
    return CountPair(wins, (1 << n) - wins)


def count_recursive(tree: GameTree, cap: int | None = None) -> CountTable:
    """Bottom-up counts for every node of ``tree``.

    A leaf counts (1, 1). An internal node sums, over subsets of its children,
    the product of the children's winning counts (members) and losing counts
    (non-members), split by whether its rule declares the subset winning.
    """
    counts: CountTable = {v: LEAF for v in tree.voters}
    for node in tree.postorder_internal:
        p = node_pass(tree, node, counts, cap, want_pivots=False)
        counts[node] = CountPair(p.wins, p.losses)
    return counts


def majority_counts_closed_form(n: int) -> CountPair:
    """Counts of the tie-free equal-weight majority game on ``n`` (odd) voters."""
    if n < 1:
        raise DomainError("need at least one voter")
    if n % 2 == 0:
        raise DomainError(f"n={n} is even: ties are possible, enumerate instead")
    half = 1 << (n - 1)
    return CountPair(half, half)


def is_balanced_exhaustive(game: GameTree, limit: int | None = None) -> bool:
    """True iff chi(S) = 1 - chi(N \\ S) for every coalition S."""
    _check_voter_cap(game, limit)
    chi = game.implicit_table()
    # the complement of mask m is (2**n - 1) - m, i.e. the reversed table
    return bool(np.all(chi != chi[::-1]))


def _local_balanced(tree: GameTree, node: str, cap: int | None) -> bool:
    rule = tree.rules[node]
    k = len(tree.children[node])
    threshold = rule.equal_weight_threshold()
    if threshold is not None:
        # equal weights: S wins iff |S| >= t, balanced iff t = (k + 1) / 2
        return 2 * threshold == k + 1
    if k > local_cap(cap):
        check_local_cap(tree, node, cap)
    chi = tree.local_table(node)
    return bool(np.all(chi != chi[::-1]))


def is_balanced_local(tree: GameTree, cap: int | None = None) -> bool:
    """True iff every local game is balanced.

    Sufficient for the whole game to be balanced; this is the routing test
    between the plain and the extended multiplicative index.
    """
    return all(_local_balanced(tree, v, cap) for v in tree.postorder_internal)

