"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py --repeats 5 --out kernels.csv

Each row reports the median wall-clock time of one kernel at one size under
both backends (numba timings exclude the first, compiling call).
"""

import argparse
import csv
import statistics
import sys
import time
from fractions import Fraction

import numpy as np

from hvg import _kernels as K
from hvg.bench import GenSpec, generate
from hvg.indices import bpi_naive_all, mebpi_all


def median_ms(fn, repeats):
    fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append((time.perf_counter() - t0) * 1e3)
    return statistics.median(times)


def cases(rng):
    for k in (12, 16, 20):
        weights = rng.integers(1, 10, size=k).astype(np.int64)
        quota = int(weights.sum() * 2 // 3)
        yield "quota_table", k, lambda w=weights, q=quota: K.quota_table(w, q, 1, -1)
        chi = K.quota_table_np(weights, quota, 1, -1)
        yield "critical_counts", k, lambda c=chi, k=k: K.critical_counts(c, k)
        wins = rng.integers(1, 1000, size=k).astype(np.int64)
        losses = rng.integers(1, 1000, size=k).astype(np.int64)
        if k <= 16:
            yield "weighted_counts", k, lambda c=chi, w=wins, l=losses: K.weighted_counts(c, w, l)
    for n in (12, 16, 20):
        tree = generate(GenSpec(n, 4, 3, "supermajority", Fraction(2, 3)))
        flat = tree.flattened
        masks = np.arange(1 << n, dtype=np.int64)
        yield "eval_masks", n, lambda m=masks, f=flat: K.eval_masks(m, f[0], *f[1:])
        yield "bpi_naive_all", n, lambda t=tree: bpi_naive_all(t)
    for n in (1000, 10_000):
        tree = generate(GenSpec(n, 10, 4, "random-quota", seed=1))
        yield "mebpi_all", n, lambda t=tree: mebpi_all(t)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", help="csv file (default: stdout)")
    args = parser.parse_args(argv)

    if not K.HAVE_NUMBA:
        print("numba is not installed; nothing to compare", file=sys.stderr)
        return 1
    original = K.BACKEND
    rows = []
    try:
        for name, size, fn in cases(np.random.default_rng(args.seed)):
            timings = {}
            for backend in ("numpy", "numba"):
                K.use_backend(backend)
                timings[backend] = median_ms(fn, args.repeats)
            rows.append([name, size, f"{timings['numpy']:.3f}", f"{timings['numba']:.3f}", f"{timings['numpy'] / timings['numba']:.2f}"])
    finally:
        K.use_backend(original)

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["kernel", "size", "numpy_ms", "numba_ms", "speedup"])
        writer.writerows(rows)
    finally:
        if args.out:
            fh.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
