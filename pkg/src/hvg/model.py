"""Flat and hierarchical voting games.

A :class:`GameTree` is an immutable rooted tree whose leaves are voters and
whose internal nodes each carry a local rule over their children. Three rule
kinds exist:

* :class:`QuotaRule` -- weights and a quota, a subset wins iff its weight
  reaches the quota;
* :class:`MajorityRule` -- weights with the quota fixed at half the total
  weight (exact, possibly half-integral), optionally with a tie-breaking child;
* :class:`TableRule` -- an explicit monotone rule given by its winning sets.

Evaluation of a coalition over voters proceeds bottom-up: a leaf is 1 iff it
is in the coalition, an internal node applies its rule to the set of children
that evaluated to 1.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from types import MappingProxyType
from typing import Union

import numpy as np

from hvg import _kernels as K
from hvg.errors import DomainError, GameValidationError

__all__ = [
    "Coalition",
    "FlatGame",
    "GameTree",
    "LocalRule",
    "MajorityRule",
    "QuotaRule",
    "TableRule",
    "ValidationReport",
    "ancestors",
    "eval_implicit",
    "eval_local",
    "leaves_under",
    "local_subgame",
    "subgame",
    "validate",
]


# ---------------------------------------------------------------------------
# local rules


def _as_fraction(q) -> Fraction:
    if isinstance(q, float):
        # floats only pass through when they are exact half-integers
        f = Fraction(q)
        if f.denominator > 2:
            raise DomainError(f"quota {q!r} is not an integer or half-integer")
        return f
    return Fraction(q)


@dataclass(frozen=True)
class QuotaRule:
    """A subset wins iff the sum of its weights is at least ``quota``."""

    members: tuple[str, ...]
    weights: tuple[int, ...]
    quota: Fraction

    kind = "quota"

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        object.__setattr__(self, "weights", tuple(int(w) for w in self.weights))
        object.__setattr__(self, "quota", _as_fraction(self.quota))
        if len(self.members) != len(self.weights):
            raise DomainError("weights and members differ in length")

    @classmethod
    def from_weights(cls, weights: Mapping[str, int], quota) -> "QuotaRule":
        return cls(tuple(weights), tuple(weights.values()), quota)

    @property
    def weight_map(self) -> dict[str, int]:
        return dict(zip(self.members, self.weights))

    @property
    def tie_breaker(self):
        return None

    def wins(self, subset: Iterable[str]) -> bool:
        chosen = set(subset)
        total = sum(w for m, w in zip(self.members, self.weights) if m in chosen)
        return total >= self.quota

    def equal_weight_threshold(self) -> int | None:
        """Smallest winning coalition size when all weights are equal, else None."""
        if len(set(self.weights)) != 1:
            return None
        return max(1, math.ceil(self.quota / self.weights[0]))

    def chi_table(self, order: Sequence[str]) -> np.ndarray:
        wmap = self.weight_map
        weights = np.array([wmap[c] for c in order], dtype=np.int64)
        q = self.quota
        return K.quota_table(weights, q.numerator, q.denominator, -1)

    def reordered(self, order: Sequence[str]) -> "QuotaRule":
        wmap = self.weight_map
        return QuotaRule(tuple(order), tuple(wmap[c] for c in order), self.quota)

    def scaled(self, factor: int) -> "QuotaRule":
        return QuotaRule(self.members, tuple(w * factor for w in self.weights), self.quota * factor)


@dataclass(frozen=True)
class MajorityRule:
    """Weighted majority: a subset wins iff its weight is at least half the total.

    With ``tie_breaker`` set, a subset holding exactly half the weight wins only
    if it contains that child.
    """

    members: tuple[str, ...]
    weights: tuple[int, ...]
    tie_breaker: str | None = None

    kind = "majority"

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        object.__setattr__(self, "weights", tuple(int(w) for w in self.weights))
        if len(self.members) != len(self.weights):
            raise DomainError("weights and members differ in length")

    @classmethod
    def from_weights(cls, weights: Mapping[str, int], tie_breaker=None) -> "MajorityRule":
        return cls(tuple(weights), tuple(weights.values()), tie_breaker)

    @classmethod
    def equal(cls, members: Sequence[str]) -> "MajorityRule":
        return cls(tuple(members), (1,) * len(members))

    @property
    def quota(self) -> Fraction:
        return Fraction(sum(self.weights), 2)

    @property
    def weight_map(self) -> dict[str, int]:
        return dict(zip(self.members, self.weights))

    def wins(self, subset: Iterable[str]) -> bool:
        chosen = set(subset)
        twice = 2 * sum(w for m, w in zip(self.members, self.weights) if m in chosen)
        total = sum(self.weights)
        if twice != total:
            return twice > total
        return self.tie_breaker is None or self.tie_breaker in chosen

    def equal_weight_threshold(self) -> int | None:
        if self.tie_breaker is not None or len(set(self.weights)) != 1:
            return None
        return max(1, math.ceil(Fraction(len(self.weights), 2)))

    def chi_table(self, order: Sequence[str]) -> np.ndarray:
        wmap = self.weight_map
        weights = np.array([wmap[c] for c in order], dtype=np.int64)
        tie_bit = -1 if self.tie_breaker is None else list(order).index(self.tie_breaker)
        return K.quota_table(weights, sum(self.weights), 2, tie_bit)

    def reordered(self, order: Sequence[str]) -> "MajorityRule":
        wmap = self.weight_map
        return MajorityRule(tuple(order), tuple(wmap[c] for c in order), self.tie_breaker)

    def scaled(self, factor: int) -> "MajorityRule":
        return MajorityRule(self.members, tuple(w * factor for w in self.weights), self.tie_breaker)


@dataclass(frozen=True)
class TableRule:
    """Explicit rule over ``members``.

    By default ``sets`` are minimal winning coalitions and every superset wins.
    With ``closed=False`` the sets are taken literally as the complete list of
    winning coalitions; :func:`validate` then checks that list is monotone.
    """

    members: tuple[str, ...]
    sets: tuple[frozenset, ...]
    closed: bool = True

    kind = "table"

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        object.__setattr__(self, "sets", self._canonical(frozenset(s) for s in self.sets))

    def _canonical(self, sets) -> tuple[frozenset, ...]:
        pos = {m: i for i, m in enumerate(self.members)}
        return tuple(sorted(set(sets), key=lambda s: (len(s), sorted(pos.get(x, -1) for x in s))))

    @property
    def tie_breaker(self):
        return None

    def wins(self, subset: Iterable[str]) -> bool:
        chosen = frozenset(subset)
        if self.closed:
            return any(s <= chosen for s in self.sets)
        return chosen in set(self.sets)

    def equal_weight_threshold(self) -> int | None:
        return None

    def reordered(self, order: Sequence[str]) -> "TableRule":
        return TableRule(tuple(order), self.sets, self.closed)

    def minimal_sets(self) -> tuple[frozenset, ...]:
        """The antichain of minimal winning sets, in a canonical order."""
        pool = set(self.sets)
        return self._canonical(s for s in pool if not any(t < s for t in pool))

    def chi_table(self, order: Sequence[str]) -> np.ndarray:
        pos = {c: i for i, c in enumerate(order)}
        seeds = np.array([sum(1 << pos[x] for x in s) for s in self.sets], dtype=np.int64)
        k = len(order)
        if self.closed:
            return K.minimal_closure(k, seeds)
        chi = np.zeros(1 << k, dtype=np.uint8)
        chi[seeds] = 1
        return chi


LocalRule = Union[QuotaRule, MajorityRule, TableRule]


# ---------------------------------------------------------------------------
# coalitions


@dataclass(frozen=True)
class Coalition:
    """A subset of an ordered member list, stored as a bit mask."""

    members: tuple[str, ...]
    bits: int = 0

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if self.bits < 0 or self.bits >> len(self.members):
            raise DomainError("coalition mask wider than its member list")

    @classmethod
    def of(cls, members: Sequence[str], chosen: Iterable[str]) -> "Coalition":
        members = tuple(members)
        pos = {m: i for i, m in enumerate(members)}
        bits = 0
        for c in chosen:
            if c not in pos:
                raise DomainError(f"{c!r} is not a member")
            bits |= 1 << pos[c]
        return cls(members, bits)

    def __contains__(self, node) -> bool:
        try:
            i = self.members.index(node)
        except ValueError:
            return False
        return bool(self.bits >> i & 1)

    def ids(self) -> frozenset:
        return frozenset(m for i, m in enumerate(self.members) if self.bits >> i & 1)

    def __len__(self) -> int:
        return bin(self.bits).count("1")


# ---------------------------------------------------------------------------
# trees


class GameTree:
    """Immutable hierarchical voting game.

    Parameters
    ----------
    root : str
        Id of the root node. A tree whose root has no children is the
        degenerate one-voter game.
    children : mapping
        Internal node id -> ordered child ids. Leaves do not appear as keys.
    rules : mapping
        Internal node id -> local rule over exactly that node's children.
    """

    def __init__(self, root: str, children: Mapping[str, Sequence[str]], rules: Mapping[str, LocalRule]):
        self.root = root
        self.children = MappingProxyType({k: tuple(v) for k, v in children.items()})
        normalized = {}
        for node, rule in rules.items():
            kids = self.children.get(node)
            if kids is not None and rule.members != kids and sorted(rule.members) == sorted(kids):
                # rules follow the tree's child order so structural equality is order-free
                rule = rule.reordered(kids)
            normalized[node] = rule
        self.rules = MappingProxyType(normalized)
        self._tables: dict[str, np.ndarray] = {}

    @classmethod
    def flat(cls, rule: LocalRule, root: str = "root") -> "GameTree":
        return cls(root, {root: rule.members}, {root: rule})

    def __repr__(self):
        return f"GameTree(root={self.root!r}, voters={len(self.voters)}, depth={self.depth})"

    def __eq__(self, other):
        if not isinstance(other, GameTree):
            return NotImplemented
        return (self.root, dict(self.children), dict(self.rules)) == (
            other.root,
            dict(other.children),
            dict(other.rules),
        )

    __hash__ = None

    def is_leaf(self, node: str) -> bool:
        return node not in self.children

    @cached_property
    def nodes(self) -> frozenset:
        found = {self.root}
        for parent, kids in self.children.items():
            found.add(parent)
            found.update(kids)
        return frozenset(found)

    @cached_property
    def parent(self) -> Mapping[str, str]:
        out = {}
        for p, kids in self.children.items():
            for c in kids:
                out[c] = p
        return MappingProxyType(out)

    @cached_property
    def preorder(self) -> tuple[str, ...]:
        out, stack = [], [self.root]
        while stack:
            v = stack.pop()
            out.append(v)
            stack.extend(reversed(self.children.get(v, ())))
        return tuple(out)

    @cached_property
    def postorder_internal(self) -> tuple[str, ...]:
        return tuple(v for v in reversed(self.preorder) if v in self.children)

    @cached_property
    def voters(self) -> tuple[str, ...]:
        """Leaves in left-to-right order; bit j of a voter mask is ``voters[j]``."""
        return tuple(v for v in self.preorder if v not in self.children)

    @cached_property
    def voter_index(self) -> Mapping[str, int]:
        return MappingProxyType({v: i for i, v in enumerate(self.voters)})

    @cached_property
    def leaf_count(self) -> Mapping[str, int]:
        out = {}
        for v in reversed(self.preorder):
            kids = self.children.get(v)
            out[v] = 1 if kids is None else sum(out[c] for c in kids)
        return MappingProxyType(out)

    @cached_property
    def depth(self) -> int:
        level = {self.root: 0}
        for v in self.preorder:
            for c in self.children.get(v, ()):
                level[c] = level[v] + 1
        return max(level.values())

    @cached_property
    def branching(self) -> int:
        return max((len(k) for k in self.children.values()), default=0)

    @property
    def is_flat(self) -> bool:
        return self.depth <= 1

    def require(self, node: str) -> None:
        if node not in self.nodes:
            raise DomainError(f"unknown node {node!r}")

    def local_table(self, node: str) -> np.ndarray:
        """Characteristic table of ``node``'s rule, bit j = ``children[node][j]``.

        The caller is responsible for keeping the child count within the
        enumeration cap; tables are memoized per tree.
        """
        table = self._tables.get(node)
        if table is None:
            table = self.rules[node].chi_table(self.children[node])
            table.setflags(write=False)
            self._tables[node] = table
        return table

    @cached_property
    def flattened(self):
        """Array form consumed by :func:`hvg._kernels.eval_masks`."""
        n = len(self.voters)
        index = dict(self.voter_index)
        for t, v in enumerate(self.postorder_internal):
            index[v] = n + t
        child_ptr = [0]
        child_idx: list[int] = []
        tab_ptr = [0]
        tables = []
        for v in self.postorder_internal:
            child_idx.extend(index[c] for c in self.children[v])
            child_ptr.append(len(child_idx))
            tab = self.local_table(v)
            tables.append(tab)
            tab_ptr.append(tab_ptr[-1] + tab.size)
        return (
            n,
            np.array(child_ptr, dtype=np.int64),
            np.array(child_idx, dtype=np.int64),
            np.concatenate(tables) if tables else np.zeros(0, dtype=np.uint8),
            np.array(tab_ptr, dtype=np.int64),
        )

    def implicit_table(self) -> np.ndarray:
        """chi over all 2**n voter masks. Exponential; callers enforce the cap."""
        n, child_ptr, child_idx, tables, tab_ptr = self.flattened
        masks = np.arange(1 << n, dtype=np.int64)
        return K.eval_masks(masks, n, child_ptr, child_idx, tables, tab_ptr)


FlatGame = GameTree


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def raise_for_violations(self) -> None:
        if self.violations:
            raise GameValidationError(self.violations)


def validate(tree: GameTree) -> ValidationReport:
    """Check every structural and rule invariant; never raises."""
    report = ValidationReport()
    bad = report.violations

    ids = [tree.root] + [c for kids in tree.children.values() for c in kids]
    for node in ids + list(tree.children) + list(tree.rules):
        if not isinstance(node, str) or not node:
            bad.append(f"invalid node id {node!r}")
    seen: set = set()
    dups: set = set()
    for node in ids:
        if node in seen and node not in dups:
            bad.append(f"duplicate id {node!r}")
            dups.add(node)
        seen.add(node)

    reachable, stack = set(), [tree.root]
    while stack:
        v = stack.pop()
        if v in reachable:
            if v not in dups:
                bad.append(f"cycle through {v!r}")
            continue
        reachable.add(v)
        stack.extend(tree.children.get(v, ()))
    for node in sorted(set(tree.children) - reachable):
        bad.append(f"orphan node {node!r}")
    for node in sorted(set(tree.rules) - set(tree.children)):
        bad.append(f"rule attached to leaf or unknown node {node!r}")

    for node, kids in tree.children.items():
        if len(kids) < 2:
            bad.append(f"internal node {node!r} has {len(kids)} child(ren); at least 2 required")
        rule = tree.rules.get(node)
        if rule is None:
            bad.append(f"missing rule at {node!r}")
            continue
        if sorted(rule.members) != sorted(kids):
            bad.append(f"rule/child mismatch at {node!r}")
            continue
        bad.extend(_rule_violations(node, rule))
    return report


def _rule_violations(node: str, rule: LocalRule) -> list[str]:
    out = []
    if isinstance(rule, (QuotaRule, MajorityRule)):
        if any(w < 1 for w in rule.weights):
            out.append(f"non-positive weight at {node!r}")
        total = sum(rule.weights)
        if not 0 < rule.quota <= total:
            out.append(f"quota out of range at {node!r}: {rule.quota} not in (0, {total}]")
        tb = rule.tie_breaker
        if tb is not None and tb not in rule.members:
            out.append(f"tie breaker {tb!r} is not a child of {node!r}")
        return out

    members = set(rule.members)
    for s in rule.sets:
        if not s <= members:
            out.append(f"rule/child mismatch at {node!r}: winning set names non-children")
            return out
    if frozenset() in rule.sets:
        out.append(f"empty coalition winning at {node!r}")
    full = frozenset(members)
    if not rule.wins(full):
        out.append(f"full coalition losing at {node!r}")
    if not rule.closed:
        listed = set(rule.sets)
        for s in listed:
            for extra in members - s:
                if s | {extra} not in listed:
                    out.append(f"non-monotone table at {node!r}: {sorted(s | {extra})} should win")
                    return out
    return out


# ---------------------------------------------------------------------------
# evaluation and tree queries


def eval_local(rule: LocalRule, subset: Coalition) -> int:
    """Value of ``rule`` on a coalition over the rule's own members."""
    if sorted(subset.members) != sorted(rule.members):
        raise DomainError("coalition member list does not match the rule's children")
    return int(rule.wins(subset.ids()))


def eval_implicit(tree: GameTree, coalition: Coalition | Iterable[str]) -> int:
    """Implicit characteristic function of ``tree`` on a coalition of voters."""
    if isinstance(coalition, Coalition):
        if sorted(coalition.members) != sorted(tree.voters):
            raise DomainError("coalition member list does not match the voters")
        chosen = coalition.ids()
    else:
        chosen = frozenset(coalition)
    value: dict[str, int] = {}
    for v in reversed(tree.preorder):
        kids = tree.children.get(v)
        if kids is None:
            value[v] = int(v in chosen)
        else:
            value[v] = int(tree.rules[v].wins(c for c in kids if value[c]))
    return value[tree.root]


def ancestors(tree: GameTree, node: str) -> list[str]:
    """Parent chain of ``node`` up to and including the root."""
    tree.require(node)
    out = []
    while node in tree.parent:
        node = tree.parent[node]
        out.append(node)
    return out


def leaves_under(tree: GameTree, node: str) -> frozenset:
    tree.require(node)
    out, stack = [], [node]
    while stack:
        v = stack.pop()
        kids = tree.children.get(v)
        if kids is None:
            out.append(v)
        else:
            stack.extend(kids)
    return frozenset(out)


def local_subgame(tree: GameTree, node: str) -> GameTree:
    """The flat game over ``node``'s children under ``node``'s rule."""
    tree.require(node)
    if tree.is_leaf(node):
        raise DomainError(f"{node!r} is a leaf and has no local game")
    return GameTree(node, {node: tree.children[node]}, {node: tree.rules[node]})


def subgame(tree: GameTree, node: str) -> GameTree:
    tree.require(node)
    children, rules, stack = {}, {}, [node]
    while stack:
        v = stack.pop()
        kids = tree.children.get(v)
        if kids is not None:
            children[v] = kids
            rules[v] = tree.rules[v]
            stack.extend(kids)
    return GameTree(node, children, rules)
