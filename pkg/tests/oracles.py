"""Reference implementations that share no code with the package.

Everything here works from the raw fields of the rules (weights, quota,
winning sets) and plain Python sets, so agreement with the package is real
evidence rather than a tautology.
"""

from fractions import Fraction
from itertools import combinations
from math import factorial

from hvg.model import MajorityRule, QuotaRule


def rule_wins(rule, chosen) -> bool:
    chosen = set(chosen)
    if isinstance(rule, (QuotaRule, MajorityRule)):
        total = sum(w for m, w in zip(rule.members, rule.weights) if m in chosen)
        if isinstance(rule, QuotaRule):
            return total >= rule.quota
        half = Fraction(sum(rule.weights), 2)
        if total > half:
            return True
        if total == half:
            return rule.tie_breaker is None or rule.tie_breaker in chosen
        return False
    if rule.closed:
        return any(set(s) <= chosen for s in rule.sets)
    return frozenset(chosen) in {frozenset(s) for s in rule.sets}


def evaluate(tree, node, chosen) -> bool:
    kids = tree.children.get(node)
    if kids is None:
        return node in chosen
    return rule_wins(tree.rules[node], [c for c in kids if evaluate(tree, c, chosen)])


def leaves(tree, node):
    kids = tree.children.get(node)
    if kids is None:
        return [node]
    return [leaf for c in kids for leaf in leaves(tree, c)]


def subsets(items):
    items = list(items)
    for r in range(len(items) + 1):
        yield from combinations(items, r)


def brute_bpi(tree) -> dict:
    """BPI of every voter by direct enumeration of coalitions of the others."""
    voters = leaves(tree, tree.root)
    # tabulate the implicit game once, keyed by frozenset
    table = {frozenset(s): evaluate(tree, tree.root, set(s)) for s in subsets(voters)}
    out = {}
    for v in voters:
        others = [u for u in voters if u != v]
        swings = sum(1 for s in subsets(others) if table[frozenset(s) | {v}] and not table[frozenset(s)])
        out[v] = Fraction(swings, 2 ** len(others))
    return out


def brute_counts(tree, node):
    """(wins, losses) of the subgame at ``node`` by enumeration."""
    ls = leaves(tree, node)
    wins = sum(1 for s in subsets(ls) if evaluate(tree, node, set(s)))
    return wins, 2 ** len(ls) - wins


def pascal_row(n):
    row = [1]
    for _ in range(n):
        row = [a + b for a, b in zip([0] + row, row + [0])]
    return row


def binomial_by_factorials(n, k):
    return factorial(n) // (factorial(k) * factorial(n - k))
