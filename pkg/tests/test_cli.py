import json
import subprocess
import sys

import pytest

from hvg import io
from hvg.bench import unanimity_groups_tree
from hvg.cli import main


@pytest.fixture
def groups_file(tmp_path):
    path = tmp_path / "groups.json"
    io.save_game(unanimity_groups_tree(), path)
    return str(path)


class TestCommands:
    def test_validate_ok(self, groups_file, capsys):
        assert main(["validate", groups_file]) == 0
        assert capsys.readouterr().out.startswith("ok: 9 voters")

    def test_validate_reports_violations(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({
            "tree": {"id": "r", "rule": {"type": "table", "minimal_winning": [[]]}, "children": [{"id": "a"}, {"id": "b"}]}
        }))
        assert main(["validate", str(path)]) == 1
        assert "empty coalition winning" in capsys.readouterr().out

    def test_bpi_single_voter(self, groups_file, capsys):
        assert main(["bpi", groups_file, "--voter", "g1_v1"]) == 0
        assert capsys.readouterr().out == "voter power\ng1_v1 0.0546875\n"

    def test_bpi_methods_and_formats(self, groups_file, tmp_path, capsys):
        out = tmp_path / "r.json"
        assert main(["bpi", groups_file, "--method", "mbpi", "--out", str(out), "--format", "json"]) == 0
        doc = json.loads(out.read_text())
        assert doc["method"] == "mbpi" and doc["voters"]["g2_v2"]["exact"] == "1/8"
        assert main(["bpi", groups_file, "--method", "naive", "--format", "csv", "--precision", "3"]) == 0
        assert "g3_v3,7/128,0.0547" in capsys.readouterr().out

    def test_bpi_sample(self, groups_file, capsys):
        assert main(["bpi", groups_file, "--method", "sample", "--samples", "2000", "--seed", "9", "--format", "json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["seed"] == 9 and doc["samples"] == 2000

    def test_count(self, groups_file, capsys):
        assert main(["count", groups_file, "--node", "root"]) == 0
        assert capsys.readouterr().out == "node wins losses\nroot 22 490\n"
        assert main(["count", groups_file, "--node", "nope"]) == 1

    def test_balance(self, groups_file, capsys):
        assert main(["balance", groups_file, "--exhaustive"]) == 0
        assert capsys.readouterr().out == "locally balanced: no\nbalanced: no\n"

    def test_lemma1(self, capsys):
        assert main(["lemma1", "40", "--precision", "5"]) == 0
        assert capsys.readouterr().out.strip() == "0.12537"
        assert main(["lemma1", "15", "--exact"]) == 0
        assert "429/2048" in capsys.readouterr().out

    def test_gen_roundtrip(self, tmp_path, capsys):
        out = tmp_path / "g.json"
        args = ["gen", "--leaves", "9", "--branching", "3", "--depth", "2", "--rule", "supermajority:1", "--seed", "1"]
        assert main(args + ["--out", str(out)]) == 0
        tree = io.load(out)
        assert all(r.quota == 3 for r in tree.rules.values())
        assert main(args) == 0
        assert capsys.readouterr().out == out.read_text()


class TestExitCodes:
    def test_cap_exceeded(self, tmp_path):
        path = tmp_path / "big.json"
        assert main(["gen", "--leaves", "30", "--branching", "5", "--depth", "3", "--out", str(path)]) == 0
        assert main(["bpi", str(path), "--method", "naive"]) == 2

    def test_io_error(self, tmp_path):
        assert main(["validate", str(tmp_path / "missing.json")]) == 3

    def test_parse_error(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{")
        assert main(["bpi", str(path)]) == 1

    def test_domain_error(self, groups_file):
        assert main(["bpi", groups_file, "--voter", "ghost"]) == 1
        assert main(["gen", "--leaves", "100", "--branching", "3", "--depth", "2"]) == 1
        assert main(["gen", "--leaves", "9", "--branching", "3", "--depth", "2", "--rule", "supermajority:1/2"]) == 1

    def test_env_cap_override(self, tmp_path, monkeypatch):
        path = tmp_path / "wide.json"
        assert main(["gen", "--leaves", "8", "--branching", "8", "--depth", "1", "--rule", "random-quota", "--seed", "2", "--out", str(path)]) == 0
        monkeypatch.setenv("HVG_MAX_LOCAL_CHILDREN", "4")
        assert main(["bpi", str(path), "--method", "mebpi"]) == 2
        monkeypatch.setenv("HVG_MAX_LOCAL_CHILDREN", "8")
        assert main(["bpi", str(path), "--method", "mebpi"]) == 0


def test_console_script_entry_point(groups_file):
    out = subprocess.run([sys.executable, "-m", "hvg.cli", "bpi", groups_file, "--voter", "g1_v1"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.endswith("g1_v1 0.0546875\n")
