import os
import sys

import pytest

TESTS = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.dirname(TESTS)
CORPUS = os.path.join(ROOT, "corpus")
sys.path.insert(0, TESTS)


@pytest.fixture
def php_project(tmp_path):
    """Write ``{relpath: source}`` under tmp_path and analyze one entry."""
    from opflow.engine import Analyzer
    from opflow.project import load_project

    def run(files: dict, entry: str = "index.php", rules=None, config=None):
        for rel, text in files.items():
            p = tmp_path / rel
            p.parent.mkdir(parents=True, exist_ok=True)
            p.write_text(text, encoding="latin-1")
        proj = load_project([str(tmp_path)])
        assert not proj.db.errors, proj.db.errors
        return Analyzer(proj.db, rules, config).analyze_entry(str(tmp_path / entry))
    return run


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
