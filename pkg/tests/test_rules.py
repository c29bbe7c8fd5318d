import pytest

from opflow.builtins import TaintRule
from opflow.rules import ALL, RuleSet, RulesError, default_rules, load_rules, parse_rules


def test_empty_user_file_gives_the_defaults(tmp_path):
    p = tmp_path / "empty.rules"
    p.write_text("# nothing here\n\n")
    assert load_rules(str(p)) == default_rules()


def test_env_variable_selects_a_rules_file(tmp_path, monkeypatch):
    p = tmp_path / "x.rules"
    p.write_text("sink my_exec 0 RCE\n")
    monkeypatch.setenv("OPFLOW_RULES", str(p))
    assert load_rules().sinks_for("my_exec") == [(0, "RCE")]


def test_defaults_contain_the_core_rows():
    rs = default_rules()
    assert rs.sinks_for("mysql_query") == [(0, "SQLI")]
    assert rs.sinks_for("SYSTEM") == [(0, "RCE")]
    assert rs.sanitizers["urlencode"].classes == ALL and rs.sanitizers["urlencode"].reversible
    assert rs.sanitizers["mysql_real_escape_string"].classes == frozenset()
    assert rs.decoders["htmlspecialchars_decode"] == "htmlspecialchars"
    assert set(rs.sources) >= {"_GET", "_POST", "_COOKIE", "_REQUEST", "_FILES"}


def test_default_rules_are_independent_copies():
    a = default_rules()
    a.sinks["system"].append((1, "XSS"))
    assert default_rules().sinks_for("system") == [(0, "RCE")]


def test_custom_sink_is_reported(php_project, tmp_path):
    rules = parse_rules("sink my_exec 0 RCE\n", default_rules())
    res = php_project({"index.php": '<?php\nfunction my_exec($c) {}\nmy_exec($_GET["c"]);\n'},
                      rules=rules)
    assert [(f.vuln_class, f.callee, f.line) for f in res.findings] == [("RCE", "my_exec", 3)]


def test_custom_sanitizer_and_builtin_override(php_project):
    rules = parse_rules("sanitizer clean_it classes=XSS\nbuiltin clean_it clear\n"
                        "builtin strtoupper none\n", default_rules())
    res = php_project({"index.php": '<?php\necho clean_it($_GET["a"]);\n'
                                    'echo strtoupper($_GET["b"]);\n'}, rules=rules)
    assert res.findings == []
    assert rules.builtin_overrides["strtoupper"] == (TaintRule.NONE, 0)


def test_sanitizer_redefinition_replaces_the_old_decoder():
    rs = parse_rules("sanitizer urlencode classes=XSS\n", default_rules())
    assert "urldecode" not in rs.decoders and rs.sanitizers["urlencode"].classes == {"XSS"}


def test_method_sinks():
    rs = parse_rules("sink ->Exec 0 SQLI\n", RuleSet())
    assert rs.method_sinks("exec") == [(0, "SQLI")]


@pytest.mark.parametrize("text, line, fragment", [
    ("sink a 0 RCE\nsink a 0 RCE\n", 2, "duplicate sink"),
    ("sink a x RCE\n", 1, "bad sink position"),
    ("sink a 0 NOPE\n", 1, "unknown vulnerability class"),
    ("sink a 0\n", 1, "sink needs"),
    ("\n\nsanitizer s\n", 3, "sanitizer needs"),
    ("sanitizer s classes=XSS,BAD\n", 1, "unknown vulnerability class"),
    ("sanitizer s classes=XSS bogus=1\n", 1, "bad sanitizer option"),
    ("sanitizer s decoder=d\n", 1, "sanitizer needs classes="),
    ("sanitizer a classes=XSS decoder=d\nsanitizer b classes=XSS decoder=d\n", 2, "already paired"),
    ("builtin f sometimes\n", 1, "unknown builtin rule"),
    ("builtin f pass_arg=x\n", 1, "bad pass_arg index"),
    ("source $_GET\n", 1, "unknown directive"),
])
def test_errors_carry_line_and_reason(text, line, fragment):
    with pytest.raises(RulesError) as e:
        parse_rules(text, RuleSet(), "u.rules")
    assert e.value.line == line and fragment in e.value.reason
    assert str(e.value).startswith(f"u.rules:{line}:")


def test_unreadable_file(tmp_path):
    with pytest.raises(RulesError) as e:
        load_rules(str(tmp_path / "missing.rules"))
    assert "cannot read" in e.value.reason
