import gzip
import json
from fractions import Fraction

import pytest

from hvg import io
from hvg.bench import GenSpec, generate, random_game, unanimity_groups_tree
from hvg.counting import count_recursive
from hvg.errors import DocumentError, GameValidationError
from hvg.indices import PowerReport, PowerValue, mebpi_all, power_report
from hvg.model import GameTree, MajorityRule, QuotaRule, TableRule


class TestGameDocuments:
    def test_bundled_majority3(self):
        tree = io.load_bundled("majority3")
        assert tree.voters == ("a", "b", "c") and tree.is_flat

    def test_bundled_slovenia(self):
        tree = io.load_bundled("slovenia")
        assert len(tree.children["national_council"]) == 40
        assert len(tree.children["velenje_national_councillor"]) == 33
        assert len(tree.children["ljubljana_national_councillor"]) == 45
        assert tree.leaf_count["velenje_local_councillor"] == 10_039
        assert tree.leaf_count["ljubljana_local_councillor"] == 65_041

    def test_roundtrip_generated(self, tmp_path):
        for seed in range(60):
            tree = random_game(seed)
            path = tmp_path / f"g{seed}.json"
            io.save_game(tree, path)
            again = io.load(path)
            assert again == tree
            assert io.dump_game(again) == path.read_text()

    def test_canonical_key_order(self):
        text = io.dump_game(GameTree.flat(QuotaRule(("a", "b"), (2, 1), 2)))
        doc = json.loads(text)
        assert list(doc["tree"]) == ["id", "rule", "children"]
        assert list(doc["tree"]["rule"]) == ["type", "weights", "quota"]

    def test_half_integral_quota_is_a_string(self):
        rule = QuotaRule(("a", "b", "c"), (1, 1, 1), Fraction(3, 2))
        doc = io.game_to_document(GameTree.flat(rule))
        assert doc["tree"]["rule"]["quota"] == "1.5"
        assert io.loads(io.dump_game(GameTree.flat(rule))).rules["root"].quota == Fraction(3, 2)

    def test_tables_and_tie_breakers_roundtrip(self):
        tree = GameTree(
            "r",
            {"r": ("x", "g"), "g": ("a", "b", "c", "d")},
            {
                "r": TableRule(("x", "g"), (frozenset({"x", "g"}),)),
                "g": MajorityRule(("a", "b", "c", "d"), (1, 1, 1, 1), tie_breaker="c"),
            },
        )
        assert io.loads(io.dump_game(tree)) == tree

    def test_explicit_winning_list(self):
        text = json.dumps({
            "format_version": 1,
            "tree": {"id": "r", "rule": {"type": "table", "winning": [["a", "b"], ["a"]]}, "children": [{"id": "a"}, {"id": "b"}]},
        })
        tree = io.loads(text)
        assert tree.rules["r"].wins({"a"}) and not tree.rules["r"].wins({"b"})
        assert io.loads(io.dump_game(tree)) == tree

    def test_gzip(self, tmp_path):
        tree = unanimity_groups_tree()
        path = tmp_path / "g.json.gz"
        io.save_game(tree, path)
        with gzip.open(path, "rt") as fh:
            assert json.load(fh)["format_version"] == 1
        assert io.load(path) == tree
        first = path.read_bytes()
        io.save_game(tree, path)
        assert path.read_bytes() == first

    def test_duplicate_id_listed(self):
        text = json.dumps({
            "tree": {
                "id": "r",
                "rule": {"type": "majority", "weights": {"a": 1, "g": 1}},
                "children": [
                    {"id": "a"},
                    {"id": "g", "rule": {"type": "majority", "weights": {"a": 1, "b": 1}}, "children": [{"id": "a"}, {"id": "b"}]},
                ],
            }
        })
        with pytest.raises(GameValidationError) as err:
            io.loads(text)
        assert "duplicate id 'a'" in err.value.violations

    def test_parse_error_position(self):
        with pytest.raises(DocumentError) as err:
            io.loads('{"tree": {"id": "r",,}}')
        assert err.value.line == 1 and err.value.column is not None

    @pytest.mark.parametrize(
        "doc",
        [
            {"nothing": 1},
            {"format_version": 2, "tree": {"id": "r"}},
            {"tree": {"id": "r", "children": [{"id": "a"}, {"id": "b"}]}},
            {"tree": {"id": "r", "rule": {"type": "weird"}, "children": [{"id": "a"}, {"id": "b"}]}},
            {"tree": {"id": "r", "rule": {"type": "quota", "weights": {"a": 1.5, "b": 1}, "quota": 1}, "children": [{"id": "a"}, {"id": "b"}]}},
            {"tree": {"id": "a", "rule": {"type": "majority", "weights": {}}}},
        ],
    )
    def test_malformed_documents(self, doc):
        with pytest.raises(DocumentError):
            io.loads(json.dumps(doc))

    def test_invalid_rule_reported(self):
        doc = {"tree": {"id": "r", "rule": {"type": "quota", "weights": {"a": 1, "b": 1}, "quota": 5}, "children": [{"id": "a"}, {"id": "b"}]}}
        with pytest.raises(GameValidationError) as err:
            io.loads(json.dumps(doc))
        assert any("quota out of range" in v for v in err.value.violations)


class TestResults:
    def test_json_exact_strings_reparse(self, tmp_path):
        tree = random_game(21)
        report = mebpi_all(tree)
        path = tmp_path / "r.json"
        io.save_result(report, path, timing_ms=1.5)
        doc = json.loads(path.read_text())
        assert doc["method"] == "mebpi" and doc["tool_version"]
        assert list(doc["voters"]) == sorted(tree.voters)
        for v, entry in doc["voters"].items():
            value = io.parse_exact(entry["exact"])
            assert value == report[v].exact
            assert value.denominator == int(entry["exact"].split("/")[1])
        for node, c in doc["counts"].items():
            assert isinstance(c["wins"], str) and isinstance(c["losses"], str)

    def test_counts_table_text(self, tmp_path):
        counts = count_recursive(GameTree.flat(QuotaRule(("a", "b", "c"), (1, 1, 1), 3)))
        path = tmp_path / "c.txt"
        io.save_result(counts, path, fmt="table")
        lines = path.read_text().splitlines()
        assert lines[0] == "node wins losses"
        assert "root 1 7" in lines

    def test_empty_report_header_only(self, tmp_path):
        empty = PowerReport({}, "mebpi")
        for fmt, header in (("table", "voter power"), ("csv", "voter,exact,approx")):
            path = tmp_path / f"e.{fmt}"
            io.save_result(empty, path, fmt=fmt)
            assert path.read_text() == header + "\n"

    def test_csv_sorted(self):
        report = power_report(unanimity_groups_tree(), "mebpi")
        rows = io.dumps_result(report, "csv").splitlines()
        assert rows[0] == "voter,exact,approx"
        assert rows[1:] == sorted(rows[1:])
        assert rows[1] == "g1_v1,7/128,0.0546875"

    def test_sample_metadata(self):
        report = power_report(io.load_bundled("majority3"), "sample", samples=500, seed=7)
        doc = io.result_document(report)
        assert (doc["samples"], doc["seed"]) == (500, 7)
        assert doc["voters"]["a"]["exact"] is None and doc["voters"]["a"]["approximate"]

    def test_huge_exact_values(self):
        value = Fraction(3**9000, 2**20000)
        report = PowerReport({"v": PowerValue.of(value)}, "mebpi")
        doc = json.loads(io.dumps_result(report))
        assert io.parse_exact(doc["voters"]["v"]["exact"]) == value

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            io.dumps_result(PowerReport({}, "x"), "xml")


def test_generated_documents_are_byte_stable(tmp_path):
    for seed in range(20):
        spec = GenSpec(12 + seed, 4, 3, "random", seed=seed, shape="random")
        first = io.dump_game(generate(spec))
        assert io.dump_game(io.loads(first)) == first
