from hypothesis import given, strategies as st

from opflow.builtins import (REGISTRY, CallCtx, TaintRule, arg_choices, concrete_call,
                             register_minimum_set)
from opflow.engine import Analyzer
from opflow.ir import ArrayLit
from opflow.ir import ProgramDb
from opflow.rules import default_rules
from opflow.state import (Arr, Env, NULL, Scalar, ScalarType, TaintLabel, Unknown, arr_read, lit,
                          own_taint, scalar_of, to_literal)

T = frozenset({TaintLabel("GET", "/a.php", 1, "x")})
U = frozenset({TaintLabel("POST", "/a.php", 2, "y")})


def ctx(name, *args, include_path=(".",), consts=None):
    return CallCtx(name, list(args), Env("/w", include_path), consts or {}, {})


def test_registry_is_large_enough_and_consistent():
    reg = register_minimum_set()
    assert len(reg) >= 40
    assert all(name == m.name and name == name.lower() for name, m in reg.items())
    assert reg is not REGISTRY and reg == REGISTRY


def test_every_rule_sanitizer_and_decoder_is_modeled_as_clear():
    rules = default_rules()
    for s in rules.sanitizers.values():
        assert REGISTRY[s.name].taint_rule is TaintRule.CLEAR, s.name
        if s.decoder:
            assert REGISTRY[s.decoder].taint_rule is TaintRule.CLEAR, s.decoder


def test_sanitizers_pair_with_their_decoders():
    rules = default_rules()
    pairs = {s.name: s.decoder for s in rules.sanitizers.values() if s.decoder}
    assert pairs["htmlspecialchars"] == "htmlspecialchars_decode"
    assert pairs["urlencode"] == "urldecode"
    assert pairs["base64_encode"] == "base64_decode"
    for enc, dec in pairs.items():
        if REGISTRY[enc].concrete and REGISTRY[dec].concrete:
            text = "a<b>&'\"\u00e9".encode("utf-8").decode("latin-1")
            assert concrete_call(REGISTRY[dec], [concrete_call(REGISTRY[enc], [text])]) == text, enc


# ---------------------------------------------------------------- abstract models

def test_array_pad_keeps_per_index_taint():
    a = lit(ArrayLit(((0, 12), (1, 10), (2, 9))))
    out = REGISTRY["array_pad"].abstract(ctx("array_pad", a, lit(5), lit("v", T)))
    assert own_taint(arr_read(out, 0))[0] == frozenset()
    assert own_taint(arr_read(out, 3))[0] == T
    assert [k for k, _ in out.elems] == [0, 1, 2, 3, 4]


def test_array_pad_negative_size_prepends():
    a = lit(ArrayLit(((0, 1),)))
    out = REGISTRY["array_pad"].abstract(ctx("array_pad", a, lit(-3), lit("v", T)))
    assert own_taint(arr_read(out, 2))[0] == frozenset()
    assert own_taint(arr_read(out, 0))[0] == T


def test_array_pad_unknown_size_summarizes():
    a = lit(ArrayLit(((0, 1),)))
    out = REGISTRY["array_pad"].abstract(ctx("array_pad", a, Scalar(ScalarType.INT), lit("v", T)))
    assert isinstance(out, Arr) and own_taint(out)[0] == T


def test_array_key_exists():
    a = lit(ArrayLit((("k", 1),)))
    m = REGISTRY["array_key_exists"]
    assert m.abstract(ctx("array_key_exists", lit("k"), a)) == lit(True)
    assert m.abstract(ctx("array_key_exists", lit("z"), a)) == lit(False)


def test_get_include_path_reflects_the_environment():
    out = REGISTRY["get_include_path"].abstract(ctx("get_include_path", include_path=(".", "/lib")))
    assert out == lit(".:/lib")


def test_set_include_path_requests_a_new_environment():
    c = ctx("set_include_path", lit("a:b"))
    assert REGISTRY["set_include_path"].abstract(c) == lit(".")
    assert c.new_env.include_path == ("a", "b")


def test_define_and_constant():
    c = ctx("define", lit("X"), lit(3))
    REGISTRY["define"].abstract(c)
    assert c.defines == [("X", lit(3))]
    assert REGISTRY["constant"].abstract(ctx("constant", lit("X"), consts={"X": lit(3)})) == lit(3)


def test_parse_str_with_result_array():
    c = ctx("parse_str", lit("a=1&b[]=2", T), NULL)
    REGISTRY["parse_str"].abstract(c)
    out = c.out[1]
    assert to_literal(arr_read(out, "a")) == "1"
    assert own_taint(arr_read(out, "a"))[0] == T


def test_parse_str_unknown_input_taints_all_scope():
    c = ctx("parse_str", Unknown(T))
    REGISTRY["parse_str"].abstract(c)
    assert list(c.scope_writes) and c.notes


# ---------------------------------------------------------------- concrete models

def test_sprintf_and_intval():
    assert concrete_call(REGISTRY["sprintf"], ["%05.1f|%-3s|%x", 3.14159, "a", 255]) == "003.1|a  |ff"
    assert concrete_call(REGISTRY["intval"], ["12abc"]) == 12
    assert concrete_call(REGISTRY["intval"], ["0x1A", 16]) == 26
    assert concrete_call(REGISTRY["intval"], ["042", 0]) == 34


def test_arg_choices_cartesian_and_cap():
    assert arg_choices([scalar_of([1, 2]), lit("a")], 8) == [(1, "a"), (2, "a")]
    assert arg_choices([scalar_of([1, 2, 3])] * 2, 8) is None
    assert arg_choices([Unknown()], 8) is None


# ---------------------------------------------------------------- taint conservation

_taints = st.frozensets(st.sampled_from(sorted(T | U)), max_size=2)
_names = st.sampled_from(sorted(n for n, m in REGISTRY.items()
                                if m.taint_rule in (TaintRule.PASS_ALL, TaintRule.PASS_ARG)))


@given(_names, st.lists(_taints, min_size=1, max_size=4))
def test_pass_rules_conserve_taint(name, arg_taints):
    an = Analyzer(ProgramDb())
    model = REGISTRY[name]
    args = [lit("s", t) for t in arg_taints]
    out = an.apply_rule(model, args, Scalar(ScalarType.STR), {})
    got = own_taint(out)[0]
    if model.taint_rule is TaintRule.PASS_ALL:
        assert got == frozenset().union(*arg_taints)
    else:
        assert got == (arg_taints[model.arg] if model.arg < len(args) else frozenset())


@given(st.sampled_from(sorted(n for n, m in REGISTRY.items() if m.taint_rule is TaintRule.NONE)),
       st.lists(_taints, min_size=1, max_size=3))
def test_none_rule_never_taints(name, arg_taints):
    out = Analyzer(ProgramDb()).apply_rule(REGISTRY[name], [lit("s", t) for t in arg_taints],
                                           Scalar(ScalarType.STR), {})
    assert own_taint(out)[0] == frozenset()


def test_concrete_results_keep_argument_taint(php_project):
    res = php_project({"index.php": '<?php\n$x = $_GET["a"];\necho strtoupper("p" . $x);\n'})
    assert [(f.vuln_class, f.line) for f in res.findings] == [("XSS", 3)]
