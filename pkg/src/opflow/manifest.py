"""Fixture manifests: expected findings per corpus fixture.

A manifest is JSON ``{"version": 1, "fixtures": [...]}``.  Each fixture has
an ``id``, a ``path`` (directory relative to the manifest), an ``entry``
(relative to ``path``) and ``expect``, a list of ``{class, file, line}``.
``expected_report`` marks findings kept on purpose even though a human
reviewer might call them false positives.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

from .config import AnalysisConfig
from .engine import Analyzer
from .project import load_project
from .report import relpath
from .rules import RuleSet


@dataclass
class FixtureOutcome:
    fixture: dict
    expected: list
    got: list
    error: str = None

    @property
    def ok(self) -> bool:
        return self.error is None and self.expected == self.got


def load_manifest(path: str) -> list:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)["fixtures"]


def run_fixture(fixture: dict, corpus_root: str, rules: RuleSet = None,
                config: AnalysisConfig = None) -> FixtureOutcome:
    base = os.path.join(corpus_root, fixture["path"])
    proj = load_project([base])
    entry = os.path.normpath(os.path.abspath(os.path.join(base, fixture["entry"])))
    res = Analyzer(proj.db, rules, config).analyze_entry(entry)
    got = sorted((f.vuln_class, relpath(f.file, proj.root), f.line) for f in res.findings)
    expected = sorted((e["class"], e["file"], e["line"]) for e in fixture["expect"])
    error = res.error or (proj.db.errors and repr(sorted(proj.db.errors.items()))) or None
    return FixtureOutcome(fixture, expected, got, error)
