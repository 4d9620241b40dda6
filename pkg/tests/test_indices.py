from fractions import Fraction
from math import comb

import numpy as np
import pytest

from hvg.bench import GenSpec, generate, random_game, unanimity_groups_tree
from hvg.counting import count_recursive, is_balanced_local
from hvg.errors import CapExceededError, DomainError
from hvg.indices import (
    bpi_equal_weight_majority,
    bpi_naive,
    bpi_naive_all,
    bpi_sample,
    hoeffding_half_width,
    local_bpi,
    local_ebpi,
    mbpi,
    mbpi_all,
    mebpi,
    mebpi_all,
    power_report,
    resolve_method,
)
from hvg.model import GameTree, MajorityRule, QuotaRule, TableRule
from oracles import brute_bpi


def equal_majority(n):
    return GameTree.flat(MajorityRule.equal(tuple(f"v{i:02d}" for i in range(n))))


class TestNaive:
    def test_matches_brute_force_oracle(self):
        for seed in range(150):
            tree = random_game(seed, max_voters=10)
            assert bpi_naive_all(tree).exact() == brute_bpi(tree)

    def test_weighted_flat_game(self):
        # weights 3,2,2 quota 4: each voter critical in 2 of 4 coalitions
        tree = GameTree.flat(QuotaRule(("v1", "v2", "v3"), (3, 2, 2), 4))
        assert bpi_naive_all(tree).exact() == {"v1": Fraction(1, 2), "v2": Fraction(1, 2), "v3": Fraction(1, 2)}

    def test_dictator_and_dummy(self):
        tree = GameTree.flat(QuotaRule(("d", "x", "y"), (5, 1, 1), 5))
        assert bpi_naive(tree, "d").exact == 1
        assert bpi_naive(tree, "x").exact == 0

    def test_cap_and_unknown_voter(self):
        with pytest.raises(CapExceededError):
            bpi_naive_all(equal_majority(25))
        with pytest.raises(DomainError):
            bpi_naive(equal_majority(3), "nobody")


class TestMajorityClosedForm:
    @pytest.mark.parametrize("n", range(1, 21))
    def test_closed_form_matches_enumeration(self, n):
        value = bpi_equal_weight_majority(n).exact
        assert value == Fraction(comb(n - 1, (n - 1) // 2), 2 ** (n - 1))
        if n > 1:
            assert set(bpi_naive_all(equal_majority(n)).exact().values()) == {value}

    def test_fifteen(self):
        assert bpi_equal_weight_majority(15).exact == Fraction(3432, 16384)

    def test_rendering(self):
        assert bpi_equal_weight_majority(40, sig=5).approx == "0.12537"


class TestMultiplicative:
    def test_unanimity_groups(self):
        tree = unanimity_groups_tree()
        assert mbpi(tree, "g1_v1").exact == Fraction(1, 8)
        assert local_bpi(tree, "g1").exact == Fraction(1, 2)
        assert local_bpi(tree, "g1_v1").exact == Fraction(1, 4)

    def test_balanced_trees_equal_bpi(self):
        found = 0
        for seed in range(400):
            tree = random_game(seed, max_voters=12)
            if not is_balanced_local(tree):
                continue
            found += 1
            naive = bpi_naive_all(tree).exact()
            assert mbpi_all(tree).exact() == naive == mebpi_all(tree).exact()
        assert found >= 20

    def test_all_matches_single(self):
        tree = random_game(17)
        report = mbpi_all(tree)
        for v in tree.voters:
            assert report[v].exact == mbpi(tree, v).exact

    def test_root_has_no_parent_game(self):
        with pytest.raises(DomainError):
            local_bpi(unanimity_groups_tree(), "root")


class TestExtended:
    def test_local_ebpi_worked_example(self):
        tree = unanimity_groups_tree()
        counts = count_recursive(tree)
        # siblings each (W, L) = (1, 7): pivotal iff exactly one sibling wins
        assert local_ebpi(tree, "g1", counts).exact == Fraction(7 + 7, 2**2 * 2**2 * 2**2)
        assert local_ebpi(tree, "g1").exact == Fraction(7, 32)
        assert local_ebpi(tree, "g1_v1", counts).exact == Fraction(1, 4)

    def test_mebpi_worked_example(self):
        tree = unanimity_groups_tree()
        assert mebpi(tree, "g2_v3").exact == Fraction(7, 128)
        assert bpi_naive(tree, "g2_v3").exact == Fraction(14, 256)
        assert mbpi(tree, "g2_v3").exact != Fraction(7, 128)

    def test_equals_brute_force_oracle(self):
        for seed in range(200):
            tree = random_game(seed, max_voters=11)
            assert mebpi_all(tree).exact() == brute_bpi(tree)

    def test_flat_games_reduce_to_local_bpi(self):
        rng = np.random.default_rng(3)
        for _ in range(60):
            k = int(rng.integers(2, 9))
            kids = tuple(f"c{i}" for i in range(k))
            weights = tuple(int(w) for w in rng.integers(1, 6, size=k))
            tree = GameTree.flat(QuotaRule(kids, weights, int(rng.integers(1, sum(weights) + 1))))
            counts = count_recursive(tree)
            for v in kids:
                assert local_ebpi(tree, v, counts).exact == local_bpi(tree, v).exact == bpi_naive(tree, v).exact

    def test_all_matches_single(self):
        for seed in (2, 9, 31):
            tree = random_game(seed)
            report = mebpi_all(tree)
            counts = count_recursive(tree)
            for v in tree.voters:
                assert report[v].exact == mebpi(tree, v, counts=counts).exact

    def test_counts_in_report(self):
        report = mebpi_all(unanimity_groups_tree())
        assert tuple(report.counts["root"]) == (22, 490)

    def test_tie_breaker_majority(self):
        kids = ("a", "b", "c", "d")
        tree = GameTree.flat(MajorityRule(kids, (1, 1, 1, 1), tie_breaker="a"))
        assert mebpi_all(tree).exact() == brute_bpi(tree) == bpi_naive_all(tree).exact()

    def test_wide_equal_weight_nodes(self):
        # 30 groups of 2 under a 2/3 supermajority: beyond the enumeration cap
        kids = [f"g{i}" for i in range(30)]
        children = {"root": tuple(kids)}
        rules = {"root": QuotaRule(tuple(kids), (1,) * 30, 20)}
        for g in kids:
            leaves = (f"{g}_a", f"{g}_b")
            children[g] = leaves
            rules[g] = QuotaRule(leaves, (1, 1), 2)
        tree = GameTree("root", children, rules)
        value = mebpi_all(tree)["g0_a"].exact
        # group pivotal iff exactly 19 of the other 29 groups win (each wins w.p. 1/4)
        expected = Fraction(comb(29, 19) * 3**10, 4**29) * Fraction(1, 2)
        assert value == expected

    def test_dictator_and_dummy(self):
        tree = GameTree(
            "r",
            {"r": ("x", "g"), "g": ("a", "b")},
            {"r": TableRule(("x", "g"), (frozenset({"x"}),)), "g": MajorityRule.equal(("a", "b"))},
        )
        values = mebpi_all(tree).exact()
        assert values == {"x": 1, "a": 0, "b": 0}

    def test_scaling_invariance(self):
        for seed in range(30):
            tree = random_game(seed, max_voters=10, rule="random-quota")
            scaled = GameTree(tree.root, tree.children, {v: r.scaled(7) for v, r in tree.rules.items()})
            assert mebpi_all(tree).exact() == mebpi_all(scaled).exact()

    def test_values_in_unit_interval(self):
        for seed in range(50):
            for p in mebpi_all(random_game(seed)).exact().values():
                assert 0 <= p <= 1


class TestLog2Mode:
    def test_agrees_with_exact(self):
        for seed in range(100):
            tree = random_game(seed)
            exact = mebpi_all(tree).exact()
            approx = mebpi_all(tree, numeric="log2", sig=15)
            assert approx.extra["numeric"] == "log2"
            for v, value in exact.items():
                got = approx[v]
                assert got.approximate and got.exact is None
                if value == 0:
                    assert Fraction(got.approx) == 0
                else:
                    assert abs(Fraction(got.approx) - value) / value < Fraction(1, 10**9)

    def test_large_tree(self):
        tree = generate(GenSpec(5000, 10, 4, "supermajority", Fraction(3, 5)))
        exact = mebpi_all(tree)
        approx = mebpi_all(tree, numeric="log2", sig=12)
        for v in tree.voters[:50]:
            ref = exact[v].exact
            assert abs(Fraction(approx[v].approx) - ref) / ref < Fraction(1, 10**9)

    def test_auto_switches_on_budget(self):
        tree = random_game(4)
        assert mebpi_all(tree, numeric="auto", bit_budget=1).extra.get("numeric") == "log2"
        assert mebpi_all(tree, numeric="auto").extra.get("numeric") is None


class TestSampling:
    def test_dictator_and_dummy(self):
        tree = GameTree.flat(QuotaRule(("d", "x", "y"), (5, 1, 1), 5))
        for seed in (0, 1, 99):
            assert bpi_sample(tree, "d", 1000, seed).estimate == 1.0
            assert bpi_sample(tree, "x", 1000, seed).estimate == 0.0

    def test_reproducible(self):
        tree = random_game(12)
        v = tree.voters[0]
        assert bpi_sample(tree, v, 5000, 42) == bpi_sample(tree, v, 5000, 42)

    def test_within_half_width(self):
        tree = equal_majority(15)
        est = bpi_sample(tree, "v00", 100_000, 20240917)
        assert abs(est.estimate - comb(14, 7) / 2**14) <= est.half_width
        assert est.half_width == hoeffding_half_width(100_000)

    def test_row_evaluator_matches_mask_path(self):
        # more than 62 voters forces the row-wise evaluator
        tree = generate(GenSpec(70, 5, 3, "majority"))
        est = bpi_sample(tree, tree.voters[0], 20_000, 5)
        exact = mebpi_all(tree)[tree.voters[0]].exact
        assert abs(est.estimate - float(exact)) <= est.half_width

    def test_bad_samples(self):
        with pytest.raises(DomainError):
            bpi_sample(equal_majority(3), "v00", 0, 1)


class TestDispatch:
    def test_auto_routes(self):
        assert resolve_method(equal_majority(5), "auto") == "lemma1"
        assert resolve_method(GameTree.flat(QuotaRule(("a", "b"), (1, 2), 2)), "auto") == "naive"
        assert resolve_method(generate(GenSpec(9, 3, 2, "majority")), "auto") == "mbpi"
        assert resolve_method(unanimity_groups_tree(), "auto") == "mebpi"
        with pytest.raises(DomainError):
            resolve_method(equal_majority(3), "bogus")

    def test_every_method_agrees_where_exact(self):
        tree = generate(GenSpec(9, 3, 2, "majority"))
        expected = bpi_naive_all(tree).exact()
        for method in ("naive", "mbpi", "mebpi", "auto"):
            assert power_report(tree, method).exact() == expected

    def test_single_voter_subset(self):
        tree = unanimity_groups_tree()
        report = power_report(tree, "mebpi", voters=["g3_v2"])
        assert list(report.values) == ["g3_v2"] and report["g3_v2"].exact == Fraction(7, 128)

    def test_sample_report(self):
        report = power_report(equal_majority(5), "sample", samples=2000, seed=3)
        assert report.method == "sample" and report.seed == 3
        assert all(p.approximate for p in report.values.values())
