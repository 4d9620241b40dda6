"""Per-node work shared by the counting and index modules.

For an internal node v with children c_1..c_k the only inputs that matter are
v's rule and the children's winning/losing counts (W_j, L_j). One "node pass"
produces

* W_v and L_v, the sums of prod_j (W_j if j in S else L_j) over winning and
  losing child subsets S, and
* for each child i, the sibling-weighted pivot count
  sum over S of siblings with i pivotal of prod_{j != i} (W_j or L_j),
  i.e. the numerator of the extended local index of i.

Three routes compute it: closed form (equal weights, no tie breaker, every
child subgame balanced), a size-indexed polynomial (equal weights, any child
counts), and full enumeration of the 2**k child subsets through the kernels.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from math import comb

import numpy as np

from hvg import _kernels as K
from hvg.errors import CapExceededError

DEFAULT_LOCAL_CAP = 25
DEFAULT_VOTER_CAP = 24

# int64 sums are safe while every weighted sum stays below 2**62
_INT64_LEAF_LIMIT = 62


def local_cap(cap: int | None = None) -> int:
    if cap is not None:
        return int(cap)
    raw = os.environ.get("HVG_MAX_LOCAL_CHILDREN")
    return int(raw) if raw else DEFAULT_LOCAL_CAP


def check_local_cap(tree, node: str, cap: int | None) -> None:
    k = len(tree.children[node])
    limit = local_cap(cap)
    if k > limit:
        raise CapExceededError(
            f"node {node!r} has {k} children; enumeration cap is {limit} "
            "(raise HVG_MAX_LOCAL_CHILDREN or use an equal-weight rule)"
        )


@dataclass(frozen=True)
class NodePass:
    wins: int
    losses: int
    pivots: tuple  # per child, in child order
    route: str


def tail_binomial_sum(k: int, t: int) -> int:
    """sum_{s >= t} C(k, s)."""
    if t <= 0:
        return 1 << k
    if t > k:
        return 0
    if 2 * t == k + 1:
        return 1 << (k - 1)
    if 2 * t > k:
        c = comb(k, t)
        total = 0
        for s in range(t, k + 1):
            total += c
            c = c * (k - s) // (s + 1)
        return total
    return (1 << k) - tail_binomial_sum(k, k - t + 1)


def node_pass(tree, node: str, counts, cap: int | None = None, want_pivots: bool = True) -> NodePass:
    """Exact node pass; ``counts`` maps each child to a ``(wins, losses)`` pair."""
    kids = tree.children[node]
    k = len(kids)
    rule = tree.rules[node]
    wins = [counts[c][0] for c in kids]
    losses = [counts[c][1] for c in kids]
    threshold = rule.equal_weight_threshold()

    if threshold is not None and all(w == l for w, l in zip(wins, losses)):
        # every configuration of children carries the same weight C
        weight = 1
        for w in wins:
            weight *= w
        winning = tail_binomial_sum(k, threshold)
        pivots = ()
        if want_pivots:
            pivotal = comb(k - 1, threshold - 1)
            pivots = tuple(pivotal * (weight // w) for w in wins)
        return NodePass(weight * winning, weight * ((1 << k) - winning), pivots, "closed-form")

    if k > local_cap(cap):
        if threshold is not None:
            return _polynomial_pass(wins, losses, threshold, want_pivots)
        check_local_cap(tree, node, cap)

    chi = tree.local_table(node)
    if tree.leaf_count[node] <= _INT64_LEAF_LIMIT:
        w_arr = np.array(wins, dtype=np.int64)
        l_arr = np.array(losses, dtype=np.int64)
        total_w, total_l, piv = K.weighted_counts(chi, w_arr, l_arr)
        total_w, total_l = int(total_w), int(total_l)
        piv = [int(p) for p in piv]
    else:
        w_arr = np.array(wins, dtype=object)
        l_arr = np.array(losses, dtype=object)
        total_w, total_l, piv = K.weighted_counts_np(chi, w_arr, l_arr)
        total_w, total_l = int(total_w), int(total_l)
        piv = list(piv)
    pivots = tuple(int(p) // l for p, l in zip(piv, losses)) if want_pivots else ()
    return NodePass(total_w, total_l, pivots, "enumerate")


def _polynomial_pass(wins, losses, threshold, want_pivots):
    # coefficients of prod_j (L_j + W_j x): e[s] = weight of configurations
    # with exactly s winning children
    e = [1]
    for w, l in zip(wins, losses):
        nxt = [0] * (len(e) + 1)
        for s, c in enumerate(e):
            nxt[s] += c * l
            nxt[s + 1] += c * w
        e = nxt
    total_w = sum(e[threshold:])
    total_l = sum(e[:threshold])
    pivots = ()
    if want_pivots:
        out = []
        for w, l in zip(wins, losses):
            # divide out (L_i + W_i x); only the coefficient at threshold-1 is needed
            q = e[0] // l
            for s in range(1, threshold):
                q = (e[s] - w * q) // l
            out.append(q)
        pivots = tuple(out)
    return NodePass(total_w, total_l, pivots, "polynomial")


@dataclass(frozen=True)
class FloatNodePass:
    """Node pass in probability space: all quantities divided by 2**leaves."""

    p_win: float
    p_lose: float
    pivots: tuple  # pivot probabilities, one per child
    route: str


def node_pass_float(tree, node: str, probs, cap: int | None = None) -> FloatNodePass:
    """Like :func:`node_pass` with W_j, L_j replaced by W_j/2^m_j, L_j/2^m_j."""
    kids = tree.children[node]
    k = len(kids)
    rule = tree.rules[node]
    pw = np.array([probs[c][0] for c in kids], dtype=np.float64)
    pl = np.array([probs[c][1] for c in kids], dtype=np.float64)
    threshold = rule.equal_weight_threshold()

    if threshold is not None and np.all(pw == 0.5) and np.all(pl == 0.5):
        winning = tail_binomial_sum(k, threshold)
        # int / int true division is correctly rounded at any magnitude
        p_win = winning / (1 << k)
        p_lose = ((1 << k) - winning) / (1 << k)
        pivot = comb(k - 1, threshold - 1) / (1 << (k - 1))
        return FloatNodePass(p_win, p_lose, (pivot,) * k, "closed-form")

    if k > local_cap(cap):
        if threshold is not None:
            return _polynomial_pass_float(pw, pl, threshold)
        check_local_cap(tree, node, cap)

    chi = tree.local_table(node)
    p_win, p_lose, piv = K.weighted_counts(chi, pw, pl)
    return FloatNodePass(float(p_win), float(p_lose), tuple(float(x) for x in piv / pl), "enumerate")


def _polynomial_pass_float(pw, pl, threshold):
    e = np.ones(1)
    for w, l in zip(pw, pl):
        e = np.concatenate((e * l, [0.0])) + np.concatenate(([0.0], e * w))
    pivots = []
    for w, l in zip(pw, pl):
        # sibling-only size distribution; forward division is stable when l >= w,
        # otherwise divide from the top coefficient down
        q = _deflate(e, w, l)
        pivots.append(float(q[threshold - 1]))
    return FloatNodePass(float(e[threshold:].sum()), float(e[:threshold].sum()), tuple(pivots), "polynomial")


def _deflate(e, w, l):
    n = e.size - 1
    q = np.zeros(n)
    if l >= w:
        q[0] = e[0] / l
        for s in range(1, n):
            q[s] = (e[s] - w * q[s - 1]) / l
    else:
        q[n - 1] = e[n] / w
        for s in range(n - 1, 0, -1):
            q[s - 1] = (e[s] - l * q[s]) / w
    return np.clip(q, 0.0, None)
