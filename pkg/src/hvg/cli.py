"""Command-line interface: ``hvg <command> ...``.

Exit codes: 0 success, 1 validation or domain error, 2 enumeration cap
exceeded, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from hvg import __version__
from hvg.errors import GameValidationError, HVGError

EXIT_OK, EXIT_INVALID, EXIT_CAP, EXIT_IO = 0, 1, 2, 3


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        from hvg.io import _write_text

        _write_text(Path(out), text)


def cmd_validate(args) -> int:
    from hvg import io

    try:
        tree = io.load(args.game)
    except GameValidationError as exc:
        print("invalid")
        for v in exc.violations:
            print(f"  {v}")
        return EXIT_INVALID
    print(f"ok: {len(tree.voters)} voters, depth {tree.depth}, branching {tree.branching}")
    return EXIT_OK


def cmd_bpi(args) -> int:
    from hvg import io
    from hvg.indices import power_report

    tree = io.load(args.game)
    voters = [args.voter] if args.voter else None
    t0 = time.perf_counter()
    report = power_report(
        tree, args.method, voters, sig=args.precision, samples=args.samples, seed=args.seed
    )
    elapsed = (time.perf_counter() - t0) * 1e3
    _emit(io.dumps_result(report, args.format, elapsed), args.out)
    return EXIT_OK


def cmd_count(args) -> int:
    from hvg import io
    from hvg.counting import count_recursive
    from hvg.errors import DomainError

    tree = io.load(args.game)
    counts = count_recursive(tree)
    if args.node:
        if args.node not in counts:
            raise DomainError(f"unknown node {args.node!r}")
        counts = {args.node: counts[args.node]}
    _emit(io.dumps_result(counts, args.format), args.out)
    return EXIT_OK


def cmd_balance(args) -> int:
    from hvg import io
    from hvg.counting import is_balanced_exhaustive, is_balanced_local

    tree = io.load(args.game)
    local = is_balanced_local(tree)
    print(f"locally balanced: {'yes' if local else 'no'}")
    if args.exhaustive:
        print(f"balanced: {'yes' if is_balanced_exhaustive(tree) else 'no'}")
    return EXIT_OK


def cmd_lemma1(args) -> int:
    from hvg.indices import bpi_equal_weight_majority
    from hvg.io import _exact_str

    value = bpi_equal_weight_majority(args.n, args.precision)
    print(f"{value.approx} ({_exact_str(value.exact)})" if args.exact else value.approx)
    return EXIT_OK


def cmd_gen(args) -> int:
    from hvg import io
    from hvg.bench import GenSpec, generate, parse_rule_style

    style, fraction = parse_rule_style(args.rule)
    tree = generate(GenSpec(args.leaves, args.branching, args.depth, style, fraction, args.seed, args.shape))
    if args.out:
        io.save_game(tree, args.out)
    else:
        sys.stdout.write(io.dump_game(tree))
    return EXIT_OK


def cmd_bench(args) -> int:
    from hvg import bench

    out = Path(args.out) if args.out else None
    if args.experiment == "slovenia":
        result = bench.run_slovenia_case_study(out)
        print("cell printed exact")
        for cell in bench.slovenia_cells(result):
            print(" ".join(cell))
        print(f"elapsed_ms {result['elapsed_ms']:.1f}")
        return EXIT_OK if result["ratio_in_range"] else EXIT_INVALID
    if args.experiment == "runtime":
        _, checks = bench.run_runtime_experiment(out=out)
        print(json.dumps(checks, indent=2))
        return EXIT_OK
    _, summary = bench.run_mse_experiment(out=out, instances=args.instances, seed=args.seed)
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hvg", description="Banzhaf power in hierarchical voting games.")
    parser.add_argument("--version", action="version", version=f"hvg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a game file")
    p.add_argument("game")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bpi", help="power of one or all voters")
    p.add_argument("game")
    p.add_argument("--voter")
    p.add_argument("--method", default="auto", choices=["naive", "mbpi", "mebpi", "auto", "sample", "lemma1"])
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--precision", type=int, default=6, help="significant figures of the decimal rendering")
    p.add_argument("--out")
    p.add_argument("--format", default="table", choices=["json", "table", "csv"])
    p.set_defaults(func=cmd_bpi)

    p = sub.add_parser("count", help="winning/losing coalition counts per node")
    p.add_argument("game")
    p.add_argument("--node")
    p.add_argument("--out")
    p.add_argument("--format", default="table", choices=["json", "table", "csv"])
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("balance", help="balance checks")
    p.add_argument("game")
    p.add_argument("--exhaustive", action="store_true", help="also enumerate all coalitions")
    p.set_defaults(func=cmd_balance)

    p = sub.add_parser("lemma1", help="closed-form power in the n-voter equal-weight majority")
    p.add_argument("n", type=int)
    p.add_argument("--precision", type=int, default=6)
    p.add_argument("--exact", action="store_true", help="also print the exact fraction")
    p.set_defaults(func=cmd_lemma1)

    p = sub.add_parser("gen", help="generate a synthetic game")
    p.add_argument("--leaves", type=int, required=True)
    p.add_argument("--branching", type=int, required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--rule", default="majority", help="majority | supermajority:F | random-quota | random-table | random")
    p.add_argument("--shape", default="even", choices=["even", "random"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="experiments and the Slovenian case study")
    p.add_argument("experiment", choices=["runtime", "mse", "slovenia"])
    p.add_argument("--out", help="directory for records and plot data")
    p.add_argument("--instances", type=int, default=500, help="mse sweep size")
    p.add_argument("--seed", type=int, default=2024, help="mse sweep seed")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except HVGError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
