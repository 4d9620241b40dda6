"""Hot subset-enumeration loops, in a numba and a pure-numpy flavour.

Every kernel exists twice: ``<name>_nb`` compiled with ``numba.njit`` and
``<name>_np`` written with vectorized numpy. The public name (``<name>``)
is bound at import time to the numba version unless numba is missing or the
environment sets ``HVG_NUMBA=0``. Both flavours return identical results; the
test suite checks that directly and ``benchmarks/bench_kernels.py`` times them.

Bit ``j`` of a mask always refers to position ``j`` of the relevant ordered
member list (a node's children, or the tree's voters).
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

__all__ = [
    "BACKEND",
    "critical_counts",
    "eval_masks",
    "minimal_closure",
    "quota_table",
    "weighted_counts",
]


def _flag_enabled() -> bool:
    raw = os.environ.get("HVG_NUMBA", "1").strip().lower()
    return raw not in ("0", "false", "no", "off")


HAVE_NUMBA = numba is not None
BACKEND = "numba" if HAVE_NUMBA and _flag_enabled() else "numpy"

if HAVE_NUMBA:
    njit = numba.njit(cache=True, nogil=True)
else:  # pragma: no cover

    def njit(fn):
        return fn


# --------------------------------------------------------------------------
# local characteristic tables


def quota_table_np(weights, quota_num, quota_den, tie_bit):
    """chi[m] = 1 iff weight(m) * den > num, or == num with ``tie_bit`` present.

    ``tie_bit < 0`` means exact ties win (plain ``>=`` quota comparison).
    """
    sums = np.zeros(1, dtype=np.int64)
    for w in weights:
        sums = np.concatenate((sums, sums + w))
    lhs = sums * quota_den
    win = lhs > quota_num
    tie = lhs == quota_num
    if tie_bit < 0:
        win |= tie
    else:
        has = (np.arange(sums.size, dtype=np.int64) >> tie_bit) & 1
        win |= tie & (has == 1)
    return win.astype(np.uint8)


@njit
def quota_table_nb(weights, quota_num, quota_den, tie_bit):
    k = weights.size
    size = 1 << k
    sums = np.zeros(size, dtype=np.int64)
    out = np.zeros(size, dtype=np.uint8)
    for m in range(1, size):
        low = m & -m
        j = 0
        while (1 << j) != low:
            j += 1
        sums[m] = sums[m ^ low] + weights[j]
    for m in range(size):
        lhs = sums[m] * quota_den
        if lhs > quota_num:
            out[m] = 1
        elif lhs == quota_num:
            if tie_bit < 0 or (m >> tie_bit) & 1:
                out[m] = 1
    return out


def minimal_closure_np(k, seeds):
    """Upward closure of the seed masks: chi[m] = 1 iff m contains some seed."""
    chi = np.zeros(1 << k, dtype=np.uint8)
    chi[np.asarray(seeds, dtype=np.int64)] = 1
    for i in range(k):
        view = chi.reshape(-1, 2, 1 << i)
        view[:, 1, :] |= view[:, 0, :]
    return chi


@njit
def minimal_closure_nb(k, seeds):
    size = 1 << k
    chi = np.zeros(size, dtype=np.uint8)
    for s in seeds:
        chi[s] = 1
    for i in range(k):
        bit = 1 << i
        for m in range(size):
            if m & bit and chi[m ^ bit]:
                chi[m] = 1
    return chi


# --------------------------------------------------------------------------
# whole-tree evaluation
#
# A tree is flattened to arrays: nodes 0..n-1 are the voters (bit j of a mask
# is voter j), nodes n.. are internal nodes listed in postorder.  For internal
# node t (0-based among internals) its children are
# child_idx[child_ptr[t]:child_ptr[t+1]] and its local table is
# tables[tab_ptr[t]:tab_ptr[t+1]].


def eval_masks_np(masks, n_voters, child_ptr, child_idx, tables, tab_ptr):
    masks = np.asarray(masks, dtype=np.int64)
    n_int = child_ptr.size - 1
    if n_int == 0:
        return (masks & 1).astype(np.uint8)
    out = np.empty(masks.size, dtype=np.uint8)
    chunk = 1 << 20
    for lo in range(0, masks.size, chunk):
        block = masks[lo : lo + chunk]
        vals = [((block >> j) & 1).astype(np.int64) for j in range(n_voters)]
        for t in range(n_int):
            idx = np.zeros(block.size, dtype=np.int64)
            for pos, c in enumerate(child_idx[child_ptr[t] : child_ptr[t + 1]]):
                idx |= vals[c] << pos
            table = tables[tab_ptr[t] : tab_ptr[t + 1]]
            vals.append(table[idx].astype(np.int64))
        out[lo : lo + chunk] = vals[-1]
    return out


@njit
def eval_masks_nb(masks, n_voters, child_ptr, child_idx, tables, tab_ptr):
    n_int = child_ptr.size - 1
    out = np.empty(masks.size, dtype=np.uint8)
    if n_int == 0:
        for r in range(masks.size):
            out[r] = masks[r] & 1
        return out
    vals = np.zeros(n_voters + n_int, dtype=np.int64)
    for r in range(masks.size):
        m = masks[r]
        for j in range(n_voters):
            vals[j] = (m >> j) & 1
        for t in range(n_int):
            idx = 0
            pos = 0
            for q in range(child_ptr[t], child_ptr[t + 1]):
                idx |= vals[child_idx[q]] << pos
                pos += 1
            vals[n_voters + t] = tables[tab_ptr[t] + idx]
        out[r] = vals[n_voters + n_int - 1]
    return out


def critical_counts_np(chi, k):
    """For each bit i: #masks m without i such that chi[m | i] = 1 and chi[m] = 0."""
    out = np.zeros(k, dtype=np.int64)
    for i in range(k):
        view = chi.reshape(-1, 2, 1 << i)
        out[i] = np.count_nonzero(view[:, 1, :] > view[:, 0, :])
    return out


@njit
def critical_counts_nb(chi, k):
    out = np.zeros(k, dtype=np.int64)
    size = chi.size
    for i in range(k):
        bit = 1 << i
        acc = 0
        # masks without bit i come in runs of length ``bit``; this shape vectorizes
        for base in range(0, size, 2 * bit):
            for m in range(base, base + bit):
                acc += chi[m + bit] > chi[m]
        out[i] = acc
    return out


# --------------------------------------------------------------------------
# count-weighted sums over a node's child subsets
#
# Mask m of the children is weighted by A[m] = prod_j (W_j if j in m else L_j).
# Returned: sum of A over winning masks, over losing masks, and for each
# child i the sum of A over masks m without i where i is pivotal
# (chi[m | i] = 1, chi[m] = 0).  Every A[m] in that last sum carries the factor
# L_i, so dividing it by L_i yields the sibling-only weighted pivot count.


def weighted_counts_np(chi, wins, losses):
    """Numpy version; works for int64, float64 and object (big int) inputs."""
    k = len(wins)
    dtype = np.asarray(wins).dtype
    weight = np.ones(1, dtype=dtype)
    for j in range(k):
        weight = np.concatenate((weight * losses[j], weight * wins[j]))
    win_mask = chi.astype(bool)
    total_win = weight[win_mask].sum()
    total_lose = weight[~win_mask].sum()
    pivots = np.zeros(k, dtype=dtype)
    for i in range(k):
        chi_view = chi.reshape(-1, 2, 1 << i)
        pivotal = chi_view[:, 1, :] > chi_view[:, 0, :]
        pivots[i] = weight.reshape(-1, 2, 1 << i)[:, 0, :][pivotal].sum()
    return total_win, total_lose, pivots


def _weighted_counts_nb_impl(chi, wins, losses, zero):
    k = wins.size
    size = 1 << k
    weight = np.empty(size, dtype=wins.dtype)
    weight[0] = 1
    for j in range(k):
        half = 1 << j
        for m in range(half):
            weight[m + half] = weight[m] * wins[j]
            weight[m] = weight[m] * losses[j]
    total_win = zero
    total_lose = zero
    for m in range(size):
        if chi[m]:
            total_win += weight[m]
        else:
            total_lose += weight[m]
    pivots = np.zeros(k, dtype=wins.dtype)
    for i in range(k):
        bit = 1 << i
        acc = zero
        for base in range(0, size, 2 * bit):
            for m in range(base, base + bit):
                if chi[m + bit] > chi[m]:
                    acc += weight[m]
        pivots[i] = acc
    return total_win, total_lose, pivots


if HAVE_NUMBA:
    _wc_nb = numba.njit(cache=True, nogil=True)(_weighted_counts_nb_impl)

    def weighted_counts_nb(chi, wins, losses):
        wins = np.asarray(wins)
        if wins.dtype == object:
            # numba has no big ints; object arrays take the numpy route
            return weighted_counts_np(chi, wins, losses)
        zero = wins.dtype.type(0)
        return _wc_nb(chi, wins, np.asarray(losses, dtype=wins.dtype), zero)

else:  # pragma: no cover
    weighted_counts_nb = weighted_counts_np


_KERNELS = ("quota_table", "minimal_closure", "eval_masks", "critical_counts", "weighted_counts")


def use_backend(name: str) -> None:
    """Rebind the public kernel names to ``"numba"`` or ``"numpy"``."""
    global BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    suffix = "_nb" if name == "numba" else "_np"
    g = globals()
    for kernel in _KERNELS:
        g[kernel] = g[kernel + suffix]
    BACKEND = name


use_backend(BACKEND)
