"""Banzhaf power: naive, closed form, multiplicative, extended multiplicative, sampled."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from hvg import _kernels as K
from hvg._local import DEFAULT_VOTER_CAP, check_local_cap, local_cap, node_pass, node_pass_float
from hvg.counting import CountPair, CountTable, count_recursive
from hvg.errors import CapExceededError, DomainError
from hvg.model import GameTree, MajorityRule, QuotaRule, TableRule
from hvg.numerics import Log2Value, central_binomial_ratio, to_decimal

__all__ = [
    "METHODS",
    "PowerReport",
    "PowerValue",
    "SampleEstimate",
    "bpi_equal_weight_majority",
    "bpi_naive",
    "bpi_naive_all",
    "bpi_sample",
    "hoeffding_half_width",
    "local_bpi",
    "local_ebpi",
    "mbpi",
    "mbpi_all",
    "mebpi",
    "mebpi_all",
    "power_report",
]

METHODS = ("naive", "lemma1", "mbpi", "mebpi", "sample")
DEFAULT_SIG = 6


@dataclass(frozen=True)
class PowerValue:
    """A power index value: exact rational plus its decimal rendering.

    Values from the log-space mode have ``exact=None`` and ``approximate=True``.
    """

    exact: Fraction | None
    approx: str
    approximate: bool = False

    @classmethod
    def of(cls, value, sig: int = DEFAULT_SIG) -> "PowerValue":
        value = Fraction(value)
        if not 0 <= value <= 1:
            raise DomainError(f"power value {value} outside [0, 1]")
        return cls(value, to_decimal(value, sig))

    @classmethod
    def estimated(cls, value: float, sig: int = DEFAULT_SIG) -> "PowerValue":
        return cls(None, to_decimal(Fraction(value), sig), True)

    def __float__(self) -> float:
        return float(self.exact) if self.exact is not None else float(self.approx)


@dataclass
class PowerReport:
    """Per-voter power values produced by one method."""

    values: dict[str, PowerValue]
    method: str
    samples: int | None = None
    seed: int | None = None
    half_width: float | None = None
    counts: CountTable | None = None
    extra: dict = field(default_factory=dict)

    def __getitem__(self, voter: str) -> PowerValue:
        return self.values[voter]

    def exact(self) -> dict[str, Fraction]:
        return {v: p.exact for v, p in self.values.items()}


@dataclass(frozen=True)
class SampleEstimate:
    estimate: float
    hits: int
    samples: int
    seed: int
    half_width: float

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.hits, self.samples)


class _Renderer:
    """Memoizes num / 2**exp -> PowerValue; large trees share most values."""

    def __init__(self, sig: int):
        self.sig = sig
        self._memo: dict = {}

    def __call__(self, num: int, exp: int) -> PowerValue:
        key = (num, exp)
        out = self._memo.get(key)
        if out is None:
            if num:
                # denominators are powers of two: strip common factors by shifting
                shift = min((num & -num).bit_length() - 1, exp)
                num, exp = num >> shift, exp - shift
            out = PowerValue.of(Fraction(num, 1 << exp), self.sig)
            self._memo[key] = out
        return out


def _require_voter(tree: GameTree, voter: str) -> None:
    if voter not in tree.voter_index:
        raise DomainError(f"unknown voter {voter!r}")


# ---------------------------------------------------------------------------
# naive


def _naive_counts(game: GameTree, limit: int | None) -> np.ndarray:
    limit = DEFAULT_VOTER_CAP if limit is None else limit
    n = len(game.voters)
    if n > limit:
        raise CapExceededError(f"{n} voters exceed the naive enumeration cap of {limit}")
    chi = game.implicit_table()
    return K.critical_counts(chi, n)


def bpi_naive(game: GameTree, voter: str, limit: int | None = None, sig: int = DEFAULT_SIG) -> PowerValue:
    """Banzhaf index by enumerating every coalition of the other voters."""
    _require_voter(game, voter)
    crit = _naive_counts(game, limit)
    n = len(game.voters)
    return PowerValue.of(Fraction(int(crit[game.voter_index[voter]]), 1 << (n - 1)), sig)


def bpi_naive_all(game: GameTree, limit: int | None = None, sig: int = DEFAULT_SIG) -> PowerReport:
    crit = _naive_counts(game, limit)
    n = len(game.voters)
    render = _Renderer(sig)
    values = {v: render(int(crit[i]), n - 1) for i, v in enumerate(game.voters)}
    return PowerReport(values, "naive")


def bpi_equal_weight_majority(n: int, sig: int = DEFAULT_SIG) -> PowerValue:
    """Closed-form index of any voter in an ``n``-voter equal-weight majority game."""
    return PowerValue.of(central_binomial_ratio(n), sig)


# ---------------------------------------------------------------------------
# multiplicative (plain)


def _local_bpi_counts(tree: GameTree, parent: str, cap: int | None) -> tuple:
    """Per-child pivot counts in the local game at ``parent`` (over 2**(k-1))."""
    kids = tree.children[parent]
    k = len(kids)
    threshold = tree.rules[parent].equal_weight_threshold()
    if threshold is not None:
        return (comb(k - 1, threshold - 1),) * k
    check_local_cap(tree, parent, cap)
    return tuple(int(c) for c in K.critical_counts(tree.local_table(parent), k))


def local_bpi(tree: GameTree, node: str, cap: int | None = None, sig: int = DEFAULT_SIG) -> PowerValue:
    """Banzhaf index of ``node`` in its parent's local game."""
    tree.require(node)
    if node == tree.root:
        raise DomainError("the root has no parent game")
    parent = tree.parent[node]
    counts = _local_bpi_counts(tree, parent, cap)
    k = len(tree.children[parent])
    return PowerValue.of(Fraction(counts[tree.children[parent].index(node)], 1 << (k - 1)), sig)


def mbpi(tree: GameTree, voter: str, cap: int | None = None, sig: int = DEFAULT_SIG) -> PowerValue:
    """Product of local indices along the root-to-voter path.

    Equal to the Banzhaf index when the game is balanced; computed regardless.
    """
    _require_voter(tree, voter)
    num, exp, node = 1, 0, voter
    while node != tree.root:
        parent = tree.parent[node]
        kids = tree.children[parent]
        num *= _local_bpi_counts(tree, parent, cap)[kids.index(node)]
        exp += len(kids) - 1
        node = parent
    return _Renderer(sig)(num, exp)


def mbpi_all(tree: GameTree, cap: int | None = None, sig: int = DEFAULT_SIG) -> PowerReport:
    acc = {tree.root: (1, 0)}
    for node in tree.preorder:
        kids = tree.children.get(node)
        if kids is None:
            continue
        num, exp = acc[node]
        step = len(kids) - 1
        memo: dict = {}
        for child, c in zip(kids, _local_bpi_counts(tree, node, cap)):
            if c not in memo:
                memo[c] = num * c
            acc[child] = (memo[c], exp + step)
    render = _Renderer(sig)
    return PowerReport({v: render(*acc[v]) for v in tree.voters}, "mbpi")


# ---------------------------------------------------------------------------
# extended multiplicative


def _sibling_weights(wins, losses, dtype):
    weight = np.ones(1, dtype=dtype)
    for w, l in zip(wins, losses):
        weight = np.concatenate((weight * l, weight * w))
    return weight


def local_ebpi(
    tree: GameTree,
    node: str,
    counts: CountTable | None = None,
    cap: int | None = None,
    sig: int = DEFAULT_SIG,
) -> PowerValue:
    """Extended local index of ``node`` in its parent's game.

    Every configuration S of the siblings in which ``node`` is pivotal counts
    with weight prod over siblings of W_j (j in S) or L_j (j not in S); the
    total is divided by 2**(k-1) * prod over siblings of 2**(leaves_j - 1).
    """
    tree.require(node)
    if node == tree.root:
        raise DomainError("the root has no parent game")
    if counts is None:
        counts = count_recursive(tree, cap)
    parent = tree.parent[node]
    kids = tree.children[parent]
    k = len(kids)
    pos = kids.index(node)
    siblings = kids[:pos] + kids[pos + 1 :]
    wins = [counts[s][0] for s in siblings]
    losses = [counts[s][1] for s in siblings]
    sib_exp = sum(tree.leaf_count[s] - 1 for s in siblings)
    exp = (k - 1) + sib_exp

    threshold = tree.rules[parent].equal_weight_threshold()
    if threshold is not None and wins == losses:
        # all sibling configurations weigh the same; reduces to the closed form
        return PowerValue.of(Fraction(comb(k - 1, threshold - 1), 1 << (k - 1)), sig)

    check_local_cap(tree, parent, cap)
    chi = tree.local_table(parent).astype(np.int64)
    small = tree.leaf_count[parent] <= 62
    weight = _sibling_weights(wins, losses, np.int64 if small else object)
    sub = np.arange(1 << (k - 1), dtype=np.int64)
    low = (1 << pos) - 1
    full = (sub & low) | ((sub >> pos) << (pos + 1))
    swing = chi[full | (1 << pos)] - chi[full]
    numerator = int((swing.astype(weight.dtype) * weight).sum())
    return PowerValue.of(Fraction(numerator, 1 << exp), sig)


def mebpi(
    tree: GameTree,
    voter: str,
    cap: int | None = None,
    counts: CountTable | None = None,
    sig: int = DEFAULT_SIG,
) -> PowerValue:
    """Two passes: count every subgame, then multiply local extended indices up the path."""
    _require_voter(tree, voter)
    if counts is None:
        counts = count_recursive(tree, cap)
    value = Fraction(1)
    node = voter
    while node != tree.root:
        value *= local_ebpi(tree, node, counts, cap, sig).exact
        node = tree.parent[node]
    return PowerValue.of(value, sig)


def mebpi_all(
    tree: GameTree,
    cap: int | None = None,
    sig: int = DEFAULT_SIG,
    numeric: str = "exact",
    bit_budget: int = 200_000,
) -> PowerReport:
    """Extended multiplicative index of every voter.

    One bottom-up pass yields every node's counts and all of its children's
    pivot numerators at once; a top-down pass multiplies them along paths.
    The denominators telescope, so every voter's value is an integer over
    2**(n-1).

    ``numeric="log2"`` runs the same passes in probability space with doubles
    and returns approximate values; ``"auto"`` switches to it when the exact
    integers would exceed ``bit_budget`` bits.
    """
    if numeric == "auto":
        numeric = "log2" if len(tree.voters) > bit_budget else "exact"
    if numeric == "log2":
        return _mebpi_all_log2(tree, cap, sig)
    if numeric != "exact":
        raise DomainError(f"unknown numeric mode {numeric!r}")

    counts = {v: (1, 1) for v in tree.voters}
    pivots = {}
    for node in tree.postorder_internal:
        p = node_pass(tree, node, counts, cap)
        counts[node] = (p.wins, p.losses)
        pivots[node] = p.pivots
    acc = {tree.root: 1}
    for node in tree.preorder:
        kids = tree.children.get(node)
        if kids is None:
            continue
        base = acc[node]
        memo: dict = {}
        for child, piv in zip(kids, pivots[node]):
            if piv not in memo:
                memo[piv] = base * piv
            acc[child] = memo[piv]
    n = len(tree.voters)
    render = _Renderer(sig)
    table = {v: CountPair(*wl) for v, wl in counts.items()}
    return PowerReport({v: render(acc[v], n - 1) for v in tree.voters}, "mebpi", counts=table)


def _mebpi_all_log2(tree: GameTree, cap: int | None, sig: int) -> PowerReport:
    probs = {v: (0.5, 0.5) for v in tree.voters}
    factors = {}
    for node in tree.postorder_internal:
        p = node_pass_float(tree, node, probs, cap)
        if p.p_lose == 0.0 or p.p_win == 0.0:
            raise DomainError(f"probability underflow at {node!r}; exact mode required")
        probs[node] = (p.p_win, p.p_lose)
        factors[node] = p.pivots
    acc = {tree.root: Log2Value.of(1)}
    for node in tree.preorder:
        kids = tree.children.get(node)
        if kids is None:
            continue
        for child, f in zip(kids, factors[node]):
            acc[child] = acc[node] * Log2Value.of(f)
    # render from mantissa and exponent so values below the double range survive
    values = {
        v: PowerValue(None, to_decimal(Fraction(acc[v].mantissa) * Fraction(2) ** acc[v].exponent, sig), True)
        for v in tree.voters
    }
    log_counts = {
        v: (math.log2(pw) + tree.leaf_count[v], math.log2(pl) + tree.leaf_count[v]) for v, (pw, pl) in probs.items()
    }
    report = PowerReport(values, "mebpi")
    report.extra = {"numeric": "log2", "log2_counts": log_counts, "log2_power": {v: acc[v].log2 for v in tree.voters}}
    return report


# ---------------------------------------------------------------------------
# sampling


def hoeffding_half_width(samples: int, alpha: float = 0.05) -> float:
    return math.sqrt(math.log(2 / alpha) / (2 * samples))


def _eval_rows(tree: GameTree, rows: np.ndarray, cap: int | None) -> np.ndarray:
    """Implicit characteristic function on each boolean row (one column per voter)."""
    vals = {v: rows[:, i] for i, v in enumerate(tree.voters)}
    limit = local_cap(cap)
    for node in tree.postorder_internal:
        kids = tree.children[node]
        rule = tree.rules[node]
        stack = np.stack([vals[c] for c in kids], axis=1)
        if isinstance(rule, (QuotaRule, MajorityRule)):
            wmap = rule.weight_map
            w = np.array([wmap[c] for c in kids], dtype=np.int64)
            total = stack.astype(np.int64) @ w
            q = rule.quota
            lhs = total * q.denominator
            out = lhs > q.numerator
            tie = lhs == q.numerator
            if rule.tie_breaker is None:
                out |= tie
            else:
                out |= tie & vals[rule.tie_breaker]
        elif len(kids) <= limit:
            idx = stack.astype(np.int64) @ (1 << np.arange(len(kids), dtype=np.int64))
            out = tree.local_table(node)[idx].astype(bool)
        else:
            pos = {c: i for i, c in enumerate(kids)}
            out = np.zeros(rows.shape[0], dtype=bool)
            assert isinstance(rule, TableRule)
            for s in rule.sets:
                out |= stack[:, [pos[x] for x in s]].all(axis=1)
        vals[node] = out
    return vals[tree.root]


def bpi_sample(
    game: GameTree,
    voter: str,
    samples: int,
    seed: int,
    cap: int | None = None,
    batch: int = 1 << 16,
) -> SampleEstimate:
    """Monte Carlo estimate from uniform random coalitions of the other voters.

    Draws come from numpy's PCG64 seeded with ``seed`` in fixed-size batches,
    so the same inputs give the same estimate on every run and backend.
    """
    _require_voter(game, voter)
    if samples < 1:
        raise DomainError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    n = len(game.voters)
    i = game.voter_index[voter]
    bit = 1 << i
    use_masks = n <= 62 and all(len(k) <= local_cap(cap) for k in game.children.values())
    if use_masks:
        flat = game.flattened
        weights = (1 << np.arange(n, dtype=np.int64)).astype(np.int64)
    hits = 0
    left = samples
    while left:
        m = min(batch, left)
        rows = rng.integers(0, 2, size=(m, n), dtype=np.uint8).astype(bool)
        rows[:, i] = False
        if use_masks:
            masks = rows.astype(np.int64) @ weights
            without = K.eval_masks(masks, flat[0], *flat[1:])
            with_ = K.eval_masks(masks | bit, flat[0], *flat[1:])
        else:
            without = _eval_rows(game, rows, cap)
            rows[:, i] = True
            with_ = _eval_rows(game, rows, cap)
        hits += int(np.count_nonzero(with_.astype(bool) & ~without.astype(bool)))
        left -= m
    return SampleEstimate(hits / samples, hits, samples, seed, hoeffding_half_width(samples))


# ---------------------------------------------------------------------------
# dispatch


def _is_equal_majority(rule) -> bool:
    return isinstance(rule, MajorityRule) and rule.equal_weight_threshold() is not None


def resolve_method(tree: GameTree, method: str, cap: int | None = None) -> str:
    """Pick the concrete method for ``"auto"``.

    Flat games use the closed form when it applies and enumeration otherwise;
    hierarchical games use the plain product when every local game is
    balanced and the extended product in all other cases.
    """
    if method != "auto":
        if method not in METHODS:
            raise DomainError(f"unknown method {method!r}")
        return method
    from hvg.counting import is_balanced_local

    if tree.depth <= 1:
        if tree.depth == 1 and _is_equal_majority(tree.rules[tree.root]):
            return "lemma1"
        return "naive" if len(tree.voters) <= DEFAULT_VOTER_CAP else "mebpi"
    try:
        balanced = is_balanced_local(tree, cap)
    except CapExceededError:
        balanced = False
    return "mbpi" if balanced else "mebpi"


def power_report(
    tree: GameTree,
    method: str = "auto",
    voters=None,
    cap: int | None = None,
    sig: int = DEFAULT_SIG,
    samples: int = 100_000,
    seed: int = 0,
) -> PowerReport:
    """Compute a report for ``voters`` (default: all) with the named method."""
    chosen = resolve_method(tree, method, cap)
    wanted = list(tree.voters) if voters is None else list(voters)
    for v in wanted:
        _require_voter(tree, v)
    if chosen == "naive":
        full = bpi_naive_all(tree, sig=sig)
    elif chosen == "lemma1":
        rule = tree.rules.get(tree.root)
        if tree.depth != 1 or not _is_equal_majority(rule):
            raise DomainError("the closed form needs a flat equal-weight majority game without tie breaker")
        value = bpi_equal_weight_majority(len(tree.voters), sig)
        full = PowerReport({v: value for v in tree.voters}, "lemma1")
    elif chosen == "mbpi":
        full = mbpi_all(tree, cap, sig) if voters is None else None
        if full is None:
            return PowerReport({v: mbpi(tree, v, cap, sig) for v in wanted}, "mbpi")
    elif chosen == "mebpi":
        full = mebpi_all(tree, cap, sig)
    else:
        values, est = {}, None
        for v in wanted:
            est = bpi_sample(tree, v, samples, seed, cap)
            values[v] = PowerValue(None, to_decimal(est.fraction, sig), approximate=True)
        return PowerReport(
            values, "sample", samples=samples, seed=seed, half_width=hoeffding_half_width(samples)
        )
    if voters is None:
        return full
    return PowerReport({v: full.values[v] for v in wanted}, full.method, counts=full.counts)
