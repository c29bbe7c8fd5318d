import json
import os
import subprocess
import sys

import pytest

from conftest import CORPUS, ROOT
from opflow.cli import EXIT_CLEAN, EXIT_FINDINGS, EXIT_INTERNAL, EXIT_USAGE, main
from opflow.engine import Analyzer

LISTINGS = os.path.join(CORPUS, "listings")


def write(tmp_path, files):
    for rel, text in files.items():
        p = tmp_path / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
    return str(tmp_path)


def test_clean_project_exits_zero(tmp_path, capsys):
    d = write(tmp_path, {"a.php": "<?php echo 'hi';\n"})
    assert main(["analyze", d]) == EXIT_CLEAN
    assert json.loads(capsys.readouterr().out)["findings_total"] == 0


def test_findings_exit_one(tmp_path, capsys):
    d = write(tmp_path, {"a.php": "<?php\necho $_GET['x'];\n"})
    assert main(["analyze", d]) == EXIT_FINDINGS
    report = json.loads(capsys.readouterr().out)
    assert report["entries"][0]["findings"][0]["sink"]["line"] == 2


@pytest.mark.parametrize("argv, fragment", [
    (["analyze", "/nonexistent/dir"], "no such file"),
    ([], "missing command"),
    (["analyze"], "required"),
    (["analyze", LISTINGS, "--format", "xml"], "invalid choice"),
    (["analyze", LISTINGS, "--max-call-depth", "0"], "max-call-depth"),
    (["analyze", LISTINGS, "--entry", "nothing/*.php"], "no entries"),
])
def test_usage_errors_exit_two(argv, fragment, capsys):
    assert main(argv) == EXIT_USAGE
    err = capsys.readouterr().err
    assert err.startswith("opflow: ") and fragment in err


def test_bad_rules_file_exits_two(tmp_path, capsys):
    rules = tmp_path / "r.rules"
    rules.write_text("sink x 0 NOPE\n")
    assert main(["analyze", LISTINGS, "--rules", str(rules)]) == EXIT_USAGE
    assert "r.rules:1" in capsys.readouterr().err


def test_internal_error_exits_three_and_still_reports(tmp_path, capsys, monkeypatch):
    d = write(tmp_path, {"a.php": "<?php\necho $_GET['x'];\n", "b.php": "<?php\necho 1;\n"})
    real = Analyzer.analyze_entry

    def failing(self, path):
        res = real(self, path)
        if path.endswith("b.php"):
            res.error = "injected failure"
        return res
    monkeypatch.setattr(Analyzer, "analyze_entry", failing)
    assert main(["analyze", d]) == EXIT_INTERNAL
    cap = capsys.readouterr()
    report = json.loads(cap.out)
    assert [e["status"] for e in report["entries"]] == ["ok", "error"]
    assert report["findings_total"] == 1
    assert "injected failure" in cap.err


def test_compile_errors_are_reported_not_fatal(tmp_path, capsys):
    d = write(tmp_path, {"a.php": "<?php $a = ;\n", "b.php": "<?php echo 1;\n"})
    assert main(["analyze", d]) == EXIT_CLEAN
    cap = capsys.readouterr()
    assert json.loads(cap.out)["compile_errors"][0]["file"] == "a.php"
    assert "a.php" in cap.err


def test_entry_glob_and_text_format(capsys):
    rc = main(["analyze", LISTINGS, "--entry", "listing2*.php", "--format", "text"])
    out = capsys.readouterr().out
    assert rc == EXIT_FINDINGS
    assert [l for l in out.splitlines() if l.startswith("==")] == ["== listing2.php",
                                                                 "== listing2_safe.php"]


def test_out_file(tmp_path, capsys):
    out = tmp_path / "report.json"
    assert main(["analyze", os.path.join(LISTINGS, "listing6.php"), "--out", str(out)]) == EXIT_CLEAN
    assert capsys.readouterr().out == ""
    assert json.loads(out.read_text())["entries"][0]["entry"] == "listing6.php"


def test_include_path_and_cwd_options(tmp_path, capsys):
    d = write(tmp_path, {"app/index.php": "<?php\ninclude 'lib.php';\n",
                         "shared/lib.php": "<?php\necho $_GET['x'];\n"})
    shared = os.path.join(d, "shared")
    args = ["analyze", d, "--entry", "app/index.php"]
    assert main(args) == EXIT_CLEAN
    assert main(args + ["--include-path", shared]) == EXIT_FINDINGS
    assert main(args + ["--cwd", shared]) == EXIT_FINDINGS
    capsys.readouterr()


def test_dump_flags_write_files(tmp_path, capsys):
    d = write(tmp_path, {"a.php": "<?php\nfunction f($x) { return $x; }\nif ($c) { echo f(1); }\n"})
    assert main(["analyze", d, "--dump-opcodes", "--dump-cfg"]) == EXIT_CLEAN
    capsys.readouterr()
    names = sorted(os.listdir(d))
    assert names == ["a.php", "a.php.f.dot", "a.php.main.dot", "a.php.opcode"]
    assert (tmp_path / "a.php.main.dot").read_text().startswith("digraph")


def test_dumped_opcodes_analyze_like_sources(tmp_path, capsys):
    src = open(os.path.join(LISTINGS, "listing5.php")).read()
    d = write(tmp_path, {"src/listing5.php": src})
    main(["analyze", os.path.join(d, "src"), "--dump-opcodes"])
    from_src = json.loads(capsys.readouterr().out)
    os.makedirs(tmp_path / "dump")
    os.replace(tmp_path / "src" / "listing5.php.opcode", tmp_path / "dump" / "listing5.php.opcode")
    assert main(["analyze", str(tmp_path / "dump")]) == EXIT_FINDINGS
    from_dump = json.loads(capsys.readouterr().out)
    # the dump records the absolute source path, so compare file names only
    def strip(findings):
        return json.loads(json.dumps(findings).replace(str(tmp_path / "src") + "/", ""))
    assert strip(from_dump["entries"][0]["findings"]) == strip(from_src["entries"][0]["findings"])


def test_env_rules_fallback(tmp_path, capsys, monkeypatch):
    rules = tmp_path / "r.rules"
    rules.write_text("builtin strtoupper none\n")
    d = write(tmp_path, {"p/a.php": "<?php\necho strtoupper($_GET['x']);\n"})
    assert main(["analyze", d]) == EXIT_FINDINGS
    monkeypatch.setenv("OPFLOW_RULES", str(rules))
    assert main(["analyze", d]) == EXIT_CLEAN
    capsys.readouterr()


def _run_cli(*args, seed="0"):
    env = dict(os.environ, PYTHONHASHSEED=seed)
    return subprocess.run([sys.executable, "-m", "opflow", "analyze", *args], capture_output=True,
                          env=env, cwd=ROOT)


def test_output_is_identical_across_processes_and_jobs():
    a = _run_cli(CORPUS, seed="1")
    b = _run_cli(CORPUS, seed="2")
    c = _run_cli(CORPUS, "--jobs", "4", seed="3")
    assert a.returncode == b.returncode == c.returncode == EXIT_FINDINGS
    assert a.stdout == b.stdout == c.stdout
