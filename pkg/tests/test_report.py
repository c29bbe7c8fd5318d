import json
import os
import random

import jsonschema
import pytest

from conftest import CORPUS, ROOT
from opflow.engine import Analyzer, EntryResult, Finding
from opflow.project import enumerate_entries, load_project
from opflow.report import build_report, relpath, render_json, render_text
from opflow.state import TaintLabel

with open(os.path.join(ROOT, "docs", "report.schema.json"), encoding="utf-8") as _fh:
    SCHEMA = json.load(_fh)
GROUPS = sorted(d for d in os.listdir(CORPUS) if os.path.isdir(os.path.join(CORPUS, d)))


def corpus_report(group, order_seed=None, timing=False):
    proj = load_project([os.path.join(CORPUS, group)])
    entries = enumerate_entries(proj, [])
    if order_seed is not None:
        random.Random(order_seed).shuffle(entries)
    results = [Analyzer(proj.db).analyze_entry(e) for e in entries]
    return build_report(results, proj.root, proj.db.errors, timing)


def test_schema_is_itself_valid():
    jsonschema.Draft202012Validator.check_schema(SCHEMA)


@pytest.mark.parametrize("group", GROUPS)
def test_corpus_reports_validate(group):
    report = corpus_report(group, timing=True)
    jsonschema.validate(json.loads(render_json(report)), SCHEMA)


@pytest.mark.parametrize("group", GROUPS)
def test_report_is_independent_of_entry_order(group):
    base = render_json(corpus_report(group))
    for seed in range(3):
        assert render_json(corpus_report(group, seed)) == base


def test_wall_time_only_with_timing():
    assert "wall_time_s" not in render_json(corpus_report("listings"))
    assert "wall_time_s" in render_json(corpus_report("listings", timing=True))


def _finding(file, line, src_line):
    lab = TaintLabel("GET", "/r/a.php", src_line, "q")
    return Finding("XSS", file, line, "echo", 0, (lab,), (("/r/a.php", src_line, "source"),))


def test_report_layout_and_relative_paths():
    r = EntryResult("/r/a.php", [_finding("/r/a.php", 3, 2)], oplines=7, seconds=0.5)
    err = EntryResult("/r/b.php", [], error="step budget exhausted")
    report = build_report([err, r], "/r", {"/r/c.php": "/r/c.php: parse error"})
    jsonschema.validate(report, SCHEMA)
    assert [e["entry"] for e in report["entries"]] == ["a.php", "b.php"]
    assert report["entries"][1]["status"] == "error"
    assert report["totals"]["XSS"] == 1 and report["findings_total"] == 1
    assert report["compile_errors"] == [{"file": "c.php", "message": "c.php: parse error"}]
    f = report["entries"][0]["findings"][0]
    assert f["sink"] == {"file": "a.php", "line": 3, "callee": "echo", "arg": 0}
    assert f["sources"][0]["expr"] == "$_GET['q']"


def test_json_is_ascii_and_sorted():
    r = EntryResult("/r/é.php", [])
    text = render_json(build_report([r], "/r"))
    assert text.isascii() and text.endswith("\n")
    assert list(json.loads(text)) == sorted(json.loads(text))


def test_text_rendering():
    r = EntryResult("/r/a.php", [_finding("/r/a.php", 3, 2)])
    text = render_text(build_report([r], "/r"))
    assert text.splitlines()[0] == "== a.php"
    assert "XSS   a.php:3  echo arg 0  <- $_GET['q'] (a.php:2)" in text
    assert text.splitlines()[-1] == "1 finding(s): XSS=1"


def test_relpath_keeps_outside_paths():
    assert relpath("/r/x/a.php", "/r") == "x/a.php"
    assert relpath("/other/a.php", "/r") == "/other/a.php"
    assert relpath("/ra.php", "/r") == "/ra.php"
