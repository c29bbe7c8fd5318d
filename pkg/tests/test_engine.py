import time

import pytest
from hypothesis import given, settings, strategies as st

from opflow.config import AnalysisConfig


def shape(res):
    import os
    return [(f.vuln_class, os.path.basename(f.file), f.line) for f in res.findings]


def one(php_project, src, **kw):
    res = php_project({"index.php": "<?php\n" + src}, **kw)
    assert res.error is None, res.error
    return shape(res)


# ---------------------------------------------------------------- transfer

@pytest.mark.parametrize("src, expect", [
    ('echo $_GET["a"];', [("XSS", "index.php", 2)]),
    ('$x = $_POST["a"]; $y = "p" . $x; echo $y;', [("XSS", "index.php", 2)]),
    ('$x = $_COOKIE["a"]; $x .= "s"; print $x;', [("XSS", "index.php", 2)]),
    ('$x = $_GET["a"] + 1; echo $x;', []),
    ('$x = $_GET["a"] == "b"; echo $x;', []),
    ('$a = array("k" => $_GET["a"], "s" => "v"); echo $a["s"];', []),
    ('$a = array("k" => $_GET["a"], "s" => "v"); echo $a["k"];', [("XSS", "index.php", 2)]),
    ('$a = [$_GET["a"]]; $a[0] = "safe"; echo $a[0];', []),
    ('$x = "a" . "b"; echo $x;', []),
    ('system($_GET["c"]);', [("RCE", "index.php", 2)]),
    ('unlink($_REQUEST["f"]);', [("AFD", "index.php", 2)]),
    ('readfile($_GET["f"]);', [("PT", "index.php", 2)]),
    ('move_uploaded_file($_FILES["u"]["tmp_name"], $_FILES["u"]["name"]);', [("UFU", "index.php", 2)]),
    ('highlight_file($_GET["f"]);', [("SDE", "index.php", 2)]),
    ('echo intval($_GET["a"]);', []),
    ('echo sprintf("%s", $_GET["a"]);', [("XSS", "index.php", 2)]),
    ('$s = str_replace("a", "b", $_GET["a"]); echo $s;', [("XSS", "index.php", 2)]),
])
def test_transfer(php_project, src, expect):
    assert one(php_project, src) == expect


def test_finding_carries_source_and_callee(php_project):
    res = php_project({"index.php": '<?php\n$v = $_GET["name"];\necho $v;\n'})
    (f,) = res.findings
    assert (f.callee, f.arg) == ("echo", 0)
    assert [(s.source_kind, s.line, s.access_path) for s in f.sources] == [("GET", 2, "name")]


def test_variable_variables(php_project):
    assert one(php_project, '$n = "v"; $$n = $_GET["a"]; echo $v;') == [("XSS", "index.php", 2)]


# ---------------------------------------------------------------- control flow

def test_infeasible_branch_is_pruned(php_project):
    assert one(php_project, '$x = $_GET["a"];\nif (1 > 2) { echo $x; }\n') == []


def test_undefined_condition_is_null(php_project):
    assert one(php_project, '$x = $_GET["a"];\nif ($c) { echo $x; }\n') == []


def test_unknown_condition_keeps_both_branches(php_project):
    src = '$x = $_GET["a"];\nif ($_GET["c"]) { echo $x; } else { print $x; }\n'
    assert one(php_project, src) == [("XSS", "index.php", 3)]


def test_concrete_loop_is_executed(php_project):
    src = ('$s = "";\nfor ($i = 0; $i < 3; $i++) { $s .= "a"; }\n'
           'if ($s == "aaa") { echo $_GET["x"]; }\nif ($s == "aa") { echo $_GET["y"]; }\n')
    assert one(php_project, src) == [("XSS", "index.php", 4)]


def test_loop_on_tainted_condition(php_project):
    src = 'while ($_GET["c"]) {\n  $a = $_GET["d"];\n}\necho $a;\n'
    assert one(php_project, src) == [("XSS", "index.php", 5)]


def test_unbounded_loop_terminates(php_project):
    src = ('$a = array();\nwhile ($_GET["c"]) {\n  $a[] = $a;\n  $s = $s . $_GET["x"];\n}\n'
           'echo $s;\n')
    start = time.perf_counter()
    assert one(php_project, src) == [("XSS", "index.php", 7)]
    assert time.perf_counter() - start < 5


def test_foreach_over_tainted_array(php_project):
    src = 'foreach ($_GET as $k => $v) {\n  echo $v;\n}\n'
    assert one(php_project, src) == [("XSS", "index.php", 3)]


def test_switch_selects_the_matching_case(php_project):
    src = ('$m = "b";\nswitch ($m) {\n  case "a": echo $_GET["x"]; break;\n'
           '  case "b": print "ok"; break;\n}\n')
    assert one(php_project, src) == []


def test_exit_stops_the_path(php_project):
    assert one(php_project, 'exit;\necho $_GET["a"];\n') == []


# ---------------------------------------------------------------- includes

def test_include_shares_scope(php_project):
    res = php_project({"index.php": '<?php\ninclude "lib/a.php";\necho $v;\n',
                       "lib/a.php": '<?php\n$v = $_GET["z"];\n'})
    assert shape(res) == [("XSS", "index.php", 3)]


def test_chdir_changes_include_resolution(php_project):
    res = php_project({"index.php": '<?php\nchdir("lib");\ninclude "b.php";\n',
                       "lib/b.php": '<?php\necho $_GET["z"];\n',
                       "b.php": '<?php\necho "x";\n'})
    assert [(c, f, l) for c, f, l in shape(res)] == [("XSS", "b.php", 2)]
    assert res.findings[0].file.endswith("lib/b.php")


def test_include_path_is_consulted(php_project):
    res = php_project({"index.php": '<?php\nset_include_path("inc");\ninclude "x.php";\n',
                       "inc/x.php": '<?php\necho $_GET["q"];\n'})
    assert shape(res) == [("XSS", "x.php", 2)]


def test_dynamic_include_from_constant(php_project):
    res = php_project({"index.php": '<?php\ndefine("D", "lib/");\ninclude D . "a.php";\n',
                       "lib/a.php": '<?php\necho $_GET["q"];\n'})
    assert shape(res) == [("XSS", "a.php", 2)]


def test_include_once_runs_once(php_project):
    res = php_project({"index.php": '<?php\n$n = 0;\ninclude_once "a.php";\ninclude_once "a.php";\n'
                                    'if ($n == 1) { echo $_GET["q"]; }\n',
                       "a.php": '<?php\n$n = $n + 1;\n'})
    assert shape(res) == [("XSS", "index.php", 5)]


def test_eval_code_is_analyzed(php_project):
    res = php_project({"index.php": '<?php\neval(\'echo $_GET["e"];\');\n'})
    (f,) = res.findings
    assert f.file.endswith("index.php(2) : eval()'d code") and f.line == 1


# ---------------------------------------------------------------- calls

def test_context_sensitive_calls(php_project):
    src = ('function id($v) { return $v; }\n$a = id("safe");\n$b = id($_GET["x"]);\n'
           'echo $a;\necho $b;\n')
    assert one(php_project, src) == [("XSS", "index.php", 6)]


def test_sink_inside_callee_is_reported_at_the_callee(php_project):
    src = 'function out($s) {\n  echo $s;\n}\nout("x");\nout($_GET["a"]);\n'
    assert one(php_project, src) == [("XSS", "index.php", 3)]


def test_by_reference_parameters(php_project):
    src = 'function fill(&$r) { $r = $_GET["a"]; }\nfill($x);\necho $x;\n'
    assert one(php_project, src) == [("XSS", "index.php", 4)]


def test_recursion_terminates_and_keeps_taint(php_project):
    src = ('function r($n, $v) { if ($n > 0) { return r($n - 1, $v); } return $v; }\n'
           'echo r($argc, $_GET["x"]);\n')
    assert one(php_project, src) == [("XSS", "index.php", 3)]


def test_recursion_depth_is_bounded(php_project):
    src = 'function r($n) { return r($n + 1); }\necho r(0);\n'
    res = php_project({"index.php": "<?php\n" + src}, config=AnalysisConfig(max_call_depth=8))
    assert res.error is None and res.findings == []


def test_methods_and_properties(php_project):
    src = ('class A { public $p; function show() { echo $this->p; } }\n$o = new A();\n'
           '$o->p = $_GET["q"];\n$o->show();\n')
    assert one(php_project, src) == [("XSS", "index.php", 2)]


def test_tainted_dynamic_callee(php_project):
    res = php_project({"index.php": '<?php\n$f = $_GET["f"];\n$f();\n'})
    (f,) = res.findings
    assert (f.vuln_class, f.callee, f.arg) == ("RCE", "(dynamic call)", -1)


def test_constant_dynamic_callee_is_resolved(php_project):
    src = 'function show($s) { echo $s; }\n$f = "show";\n$f($_GET["a"]);\n'
    assert one(php_project, src) == [("XSS", "index.php", 2)]


# ---------------------------------------------------------------- sanitizers

@pytest.mark.parametrize("src, expect", [
    ('echo htmlspecialchars($_GET["a"]);', []),
    ('echo htmlspecialchars_decode(htmlspecialchars($_GET["a"]));', [("XSS", "index.php", 2)]),
    ('echo urldecode(htmlspecialchars($_GET["a"]));', []),
    ('echo addslashes($_GET["a"]);', [("XSS", "index.php", 2)]),
    ('mysql_query("x" . addslashes($_GET["a"]));', []),
    ('mysql_query("x" . stripslashes(addslashes($_GET["a"])));', [("SQLI", "index.php", 2)]),
    ('system(htmlspecialchars($_GET["a"]));', [("RCE", "index.php", 2)]),
    ('system(escapeshellarg($_GET["a"]));', []),
    ('echo base64_decode(base64_encode($_GET["a"]));', [("XSS", "index.php", 2)]),
    ('echo htmlspecialchars_decode(urlencode(htmlspecialchars($_GET["a"])));', []),
    ('mysql_query("id=" . mysql_real_escape_string($_GET["a"]));', [("SQLI", "index.php", 2)]),
])
def test_sanitizer_stack(php_project, src, expect):
    assert one(php_project, src) == expect


_SANITIZERS = ["htmlspecialchars", "htmlentities", "urlencode", "base64_encode", "addslashes",
               "escapeshellarg", "intval", "mysql_real_escape_string"]
_OTHERS = ["trim", "strtoupper", "urldecode", "htmlspecialchars_decode", "stripslashes",
           "base64_decode", "html_entity_decode"]
_SINKS = ["echo {}", "system({})", "mysql_query({})", "readfile({})"]


def _program(chain, sink):
    expr = '$_GET["a"]'
    for fn in chain:
        expr = f"{fn}({expr})"
    return sink.format(expr) + ";"


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(_SANITIZERS + _OTHERS), min_size=1, max_size=4),
       st.sampled_from(_SINKS), st.data())
def test_removing_a_sanitizer_never_removes_findings(tmp_path_factory, chain, sink, data):
    from opflow.engine import Analyzer
    from opflow.frontend import compile_source
    from opflow.ir import ProgramDb

    positions = [i for i, fn in enumerate(chain) if fn in _SANITIZERS]
    if not positions:
        return
    drop = data.draw(st.sampled_from(positions))

    def findings(ch):
        db = ProgramDb()
        main, funcs, classes = compile_source("<?php\n" + _program(ch, sink), "/v/p.php")
        db.add_file("/v/p.php", main, funcs, classes)
        return {(f.vuln_class, f.line) for f in Analyzer(db).analyze_entry("/v/p.php").findings}

    assert findings(chain) <= findings(chain[:drop] + chain[drop + 1:])
