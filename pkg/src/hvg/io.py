"""Game documents (JSON) and result files (JSON, plain-text table, CSV).

A game document looks like::

    {
      "format_version": 1,
      "tree": {
        "id": "root",
        "rule": {"type": "majority", "weights": {"a": 1, "b": 1, "c": 1}},
        "children": [{"id": "a"}, {"id": "b"}, {"id": "c"}]
      }
    }

Rule objects are ``{"type": "quota", "weights": {...}, "quota": 4}``,
``{"type": "majority", "weights": {...}}`` (optionally ``"tie_breaker"``) or
``{"type": "table", "minimal_winning": [[...], ...]}``. Non-integral quotas
are written as strings (``"16.5"``) and large counts as decimal strings so
no reader ever sees a binary float. Files ending in ``.gz`` are gzip
compressed.
"""

from __future__ import annotations

import csv
import gzip
import io
import json
from fractions import Fraction
from pathlib import Path

from hvg import __version__
from hvg.errors import DocumentError, GameValidationError
from hvg.model import GameTree, MajorityRule, QuotaRule, TableRule, validate
from hvg.numerics import exact_str, int_str, parse_int

__all__ = [
    "FORMAT_VERSION",
    "dump_game",
    "dumps_result",
    "game_from_document",
    "game_to_document",
    "load",
    "load_bundled",
    "loads",
    "bundled_path",
    "parse_exact",
    "save_game",
    "save_result",
]

FORMAT_VERSION = 1
RESULT_FORMATS = ("json", "table", "csv")


def _read_text(path: Path) -> str:
    if path.suffix == ".gz":
        with gzip.open(path, "rt", encoding="utf-8") as fh:
            return fh.read()
    return path.read_text(encoding="utf-8")


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix == ".gz":
        # mtime=0 keeps compressed output byte-stable
        with open(path, "wb") as raw, gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as fh:
            fh.write(text.encode("utf-8"))
    else:
        path.write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# games


def load(path) -> GameTree:
    """Read, parse and validate a game document.

    Raises :class:`DocumentError` for malformed JSON or structure and
    :class:`GameValidationError` listing every violated invariant.
    """
    return loads(_read_text(Path(path)))


def loads(text: str) -> GameTree:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    tree, duplicates = _build(doc)
    report = validate(tree)
    extra = [f"duplicate id {d!r}" for d in duplicates]
    violations = [v for v in extra if v not in report.violations] + report.violations
    if violations:
        raise GameValidationError(violations)
    return tree


def game_from_document(doc: dict) -> GameTree:
    """Build a tree from an already parsed document, without validating it."""
    return _build(doc)[0]


def _build(doc):
    if not isinstance(doc, dict) or "tree" not in doc:
        raise DocumentError("game document needs a top-level 'tree' object")
    version = doc.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise DocumentError(f"unsupported format_version {version!r}")
    children: dict = {}
    rules: dict = {}
    seen: set = set()
    duplicates: list = []
    stack = [doc["tree"]]
    root = None
    while stack:
        node = stack.pop()
        if not isinstance(node, dict) or not isinstance(node.get("id"), str):
            raise DocumentError("every node needs a string 'id'")
        nid = node["id"]
        if root is None:
            root = nid
        if nid in seen:
            if nid not in duplicates:
                duplicates.append(nid)
            continue
        seen.add(nid)
        kids = node.get("children")
        if kids is None:
            if "rule" in node:
                raise DocumentError(f"leaf {nid!r} carries a rule")
            continue
        if not isinstance(kids, list):
            raise DocumentError(f"'children' of {nid!r} must be a list")
        kid_ids = [k.get("id") if isinstance(k, dict) else None for k in kids]
        children[nid] = tuple(kid_ids)
        if "rule" not in node:
            raise DocumentError(f"internal node {nid!r} has no rule")
        rules[nid] = _parse_rule(nid, node["rule"], kid_ids)
        stack.extend(reversed(kids))
    return GameTree(root, children, rules), duplicates


def _parse_rule(nid, spec, kid_ids):
    if not isinstance(spec, dict) or "type" not in spec:
        raise DocumentError(f"rule of {nid!r} needs a 'type'")
    kind = spec["type"]
    if kind in ("quota", "majority"):
        weights = spec.get("weights")
        if not isinstance(weights, dict):
            raise DocumentError(f"rule of {nid!r} needs a 'weights' object")
        for w in weights.values():
            if not isinstance(w, int) or isinstance(w, bool):
                raise DocumentError(f"weights of {nid!r} must be integers")
        # keep child order when the weight keys cover exactly the children
        order = kid_ids if sorted(weights) == sorted(k for k in kid_ids if k) else list(weights)
        if kind == "majority":
            return MajorityRule(tuple(order), tuple(weights[k] for k in order), spec.get("tie_breaker"))
        if "quota" not in spec:
            raise DocumentError(f"quota rule of {nid!r} needs a 'quota'")
        return QuotaRule(tuple(order), tuple(weights[k] for k in order), _parse_quota(nid, spec["quota"]))
    if kind == "table":
        if "minimal_winning" in spec:
            sets, closed = spec["minimal_winning"], True
        elif "winning" in spec:
            sets, closed = spec["winning"], False
        else:
            raise DocumentError(f"table rule of {nid!r} needs 'minimal_winning'")
        if not isinstance(sets, list) or not all(isinstance(s, list) for s in sets):
            raise DocumentError(f"winning sets of {nid!r} must be lists of child ids")
        return TableRule(tuple(kid_ids), tuple(frozenset(s) for s in sets), closed)
    raise DocumentError(f"unknown rule type {kind!r} at {nid!r}")


def _parse_quota(nid, raw) -> Fraction:
    if isinstance(raw, bool) or not isinstance(raw, (int, str)):
        raise DocumentError(f"quota of {nid!r} must be an integer or a decimal string")
    try:
        return Fraction(raw)
    except ValueError:
        raise DocumentError(f"quota of {nid!r} is not a number: {raw!r}") from None


def _quota_out(q: Fraction):
    if q.denominator == 1:
        return q.numerator
    if q.denominator == 2:
        return f"{q.numerator // 2}.5"
    return f"{q.numerator}/{q.denominator}"


def _rule_out(tree: GameTree, node: str) -> dict:
    rule = tree.rules[node]
    kids = tree.children[node]
    out: dict = {"type": rule.kind}
    if isinstance(rule, (QuotaRule, MajorityRule)):
        wmap = rule.weight_map
        out["weights"] = {c: wmap[c] for c in kids}
        if isinstance(rule, QuotaRule):
            out["quota"] = _quota_out(rule.quota)
        elif rule.tie_breaker is not None:
            out["tie_breaker"] = rule.tie_breaker
    else:
        pos = {c: i for i, c in enumerate(kids)}
        chosen = rule.minimal_sets() if rule.closed else rule.sets
        out["minimal_winning" if rule.closed else "winning"] = [sorted(s, key=pos.__getitem__) for s in chosen]
    return out


def game_to_document(tree: GameTree) -> dict:
    # built bottom-up; recursion would hit the limit on deep trees
    docs: dict = {}
    for v in reversed(tree.preorder):
        kids = tree.children.get(v)
        if kids is None:
            docs[v] = {"id": v}
        else:
            docs[v] = {"id": v, "rule": _rule_out(tree, v), "children": [docs.pop(c) for c in kids]}
    return {"format_version": FORMAT_VERSION, "tree": docs[tree.root]}


def dump_game(tree: GameTree) -> str:
    return json.dumps(game_to_document(tree), indent=2, ensure_ascii=False) + "\n"


def save_game(tree: GameTree, path) -> None:
    _write_text(Path(path), dump_game(tree))


# ---------------------------------------------------------------------------
# results


def _exact_str(value: Fraction | None):
    return None if value is None else exact_str(value)


def parse_exact(text: str) -> Fraction:
    num, _, den = text.partition("/")
    return Fraction(parse_int(num), parse_int(den or "1"))


def _is_count_table(obj) -> bool:
    return isinstance(obj, dict)


def result_document(report, timing_ms: float | None = None) -> dict:
    """The JSON structure written by :func:`save_result` with ``fmt="json"``."""
    doc: dict = {"tool_version": __version__}
    if _is_count_table(report):
        doc["method"] = "count"
        doc["counts"] = {
            v: {"wins": int_str(report[v][0]), "losses": int_str(report[v][1])} for v in sorted(report)
        }
    else:
        doc["method"] = report.method
        doc["voters"] = {}
        for v, p in sorted(report.values.items()):
            entry = {"exact": _exact_str(p.exact), "approx": p.approx}
            if p.approximate:
                entry["approximate"] = True
            doc["voters"][v] = entry
        if report.counts is not None:
            doc["counts"] = {
                v: {"wins": int_str(c[0]), "losses": int_str(c[1])} for v, c in sorted(report.counts.items())
            }
        if report.method == "sample":
            doc["samples"] = report.samples
            doc["seed"] = report.seed
            doc["half_width"] = report.half_width
        if report.extra.get("numeric"):
            doc["numeric"] = report.extra["numeric"]
    if timing_ms is not None:
        doc["timing_ms"] = round(timing_ms, 3)
    return doc


def dumps_result(report, fmt: str = "json", timing_ms: float | None = None) -> str:
    if fmt == "json":
        return json.dumps(result_document(report, timing_ms), indent=2) + "\n"
    counts = _is_count_table(report)
    if fmt == "table":
        lines = ["node wins losses" if counts else "voter power"]
        if counts:
            lines += [f"{v} {int_str(report[v][0])} {int_str(report[v][1])}" for v in sorted(report)]
        else:
            lines += [f"{v} {p.approx}" for v, p in sorted(report.values.items())]
        return "\n".join(lines) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if counts:
            writer.writerow(["node", "wins", "losses"])
            writer.writerows([v, int_str(report[v][0]), int_str(report[v][1])] for v in sorted(report))
        else:
            writer.writerow(["voter", "exact", "approx"])
            writer.writerows([v, _exact_str(p.exact) or "", p.approx] for v, p in sorted(report.values.items()))
        return buf.getvalue()
    raise ValueError(f"unknown result format {fmt!r}; expected one of {RESULT_FORMATS}")


def save_result(report, path, fmt: str = "json", timing_ms: float | None = None) -> None:
    """Write a power report or a count table; entries are sorted by id."""
    _write_text(Path(path), dumps_result(report, fmt, timing_ms))


def bundled_path(name: str) -> Path:
    """Path of a game shipped with the package (``majority3``, ``unanimity_groups``, ``slovenia``)."""
    from importlib.resources import files

    root = files("hvg") / "data"
    for candidate in (f"{name}.json", f"{name}.json.gz", name):
        path = root / candidate
        if path.is_file():
            return Path(str(path))
    raise FileNotFoundError(f"no bundled game named {name!r}")


def load_bundled(name: str) -> GameTree:
    return load(bundled_path(name))
