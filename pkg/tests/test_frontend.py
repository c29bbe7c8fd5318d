import glob
import os
import re

import pytest
from hypothesis import given, settings, strategies as st

from conftest import CORPUS
from opflow.dump import write_dump
from opflow.frontend import (LexError, LowerError, ParseError, TokenKind, compile_source, lex,
                             parse_source)
from opflow.frontend import ast as A
from opflow.ir import CV, OperandKind, OpcodeKind as K, validate_unit

LISTINGS = os.path.join(CORPUS, "listings")
CORPUS_FILES = sorted(glob.glob(os.path.join(CORPUS, "**", "*.php"), recursive=True))


def kinds(tokens):
    return [(t.kind, t.value) for t in tokens]


def ops(unit):
    return [o.opcode for o in unit.oplines]


def walk(node):
    yield node
    for v in vars(node).values():
        items = v if isinstance(v, (list, tuple)) else [v]
        for x in items:
            if isinstance(x, A.Node):
                yield from walk(x)


# ---------------------------------------------------------------- lexer

def test_lex_smallest_program():
    assert kinds(lex("<?php $a = 1;")) == [
        (TokenKind.OPEN_TAG, "<?php"), (TokenKind.VARIABLE, "a"), (TokenKind.OP, "="),
        (TokenKind.INT, 1), (TokenKind.OP, ";")]


def test_lex_inline_html():
    toks = lex("Hello<?php echo 1;")
    assert [t.kind for t in toks] == [TokenKind.INLINE_HTML, TokenKind.OPEN_TAG, TokenKind.IDENT,
                                      TokenKind.INT, TokenKind.OP]
    assert toks[0].value == "Hello"


def test_lex_listing1_lines():
    with open(os.path.join(LISTINGS, "listing1", "vulnerabilities", "xss_r", "index.php"), "rb") as fh:
        toks = lex(fh.read())
    var_lines = {}
    for t in toks:
        if t.kind is TokenKind.VARIABLE:
            var_lines.setdefault(t.value, t.line)
    assert var_lines["page"] == 9
    assert var_lines["func"] == 10


def test_lex_unterminated_string():
    with pytest.raises(LexError) as e:
        lex("<?php\n$a = 'abc")
    assert e.value.line == 2


_GAP_RE = re.compile(r"(?:\s+|//[^\n]*|#[^\n]*|/\*.*?\*/)*", re.S)


def assert_lossless(src: str):
    toks = lex(src)
    pos = 0
    for t in toks:
        assert _GAP_RE.fullmatch(src[pos:t.pos]), (src[pos:t.pos], t)
        assert src[t.pos:t.pos + len(t.lexeme)] == t.lexeme
        pos = t.pos + len(t.lexeme)
    assert _GAP_RE.fullmatch(src[pos:])


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: os.path.relpath(p, CORPUS))
def test_lexemes_reproduce_corpus_files(path):
    with open(path, "rb") as fh:
        assert_lossless(fh.read().decode("latin-1"))


_FRAGMENTS = ["$a", "=", "1", ";", "'s'", '"x{$a}y"', "echo", " ", "\n", "// c\n", "/* c */",
              "(", ")", ".", "+", "foo", "[", "]", "1.5", "0x1F", "<?php ", "?>", "html"]


@settings(max_examples=300)
@given(st.lists(st.sampled_from(_FRAGMENTS), max_size=30))
def test_lexemes_reproduce_arbitrary_input(parts):
    src = "<?php " + "".join(parts)
    try:
        lex(src)
    except LexError:
        return
    assert_lossless(src)


def test_line_numbers_follow_newlines():
    toks = lex("<?php\n\n$a\n=\n'x\ny'\n;")
    assert [(t.value, t.line) for t in toks[1:]] == [("a", 3), ("=", 4), ("x\ny", 5), (";", 7)]


# ---------------------------------------------------------------- parser

def test_parse_listing2_append_at_line_4():
    with open(os.path.join(LISTINGS, "listing2.php"), "rb") as fh:
        tree = parse_source(fh.read())
    appends = [n for n in walk(tree) if isinstance(n, A.ArrayAppend)]
    assert [n.line for n in appends] == [4]


def test_parse_listing3_variadic_param():
    with open(os.path.join(LISTINGS, "listing3.php"), "rb") as fh:
        tree = parse_source(fh.read())
    fn = next(n for n in walk(tree) if isinstance(n, A.FunctionDecl))
    assert [(p.name, p.variadic) for p in fn.params] == [("numbers", True)]


def test_parse_missing_expression():
    with pytest.raises(ParseError) as e:
        parse_source("<?php $a = ;")
    assert e.value.line == 1


def test_every_node_has_a_line():
    with open(os.path.join(LISTINGS, "listing1", "vulnerabilities", "xss_r", "index.php"), "rb") as fh:
        tree = parse_source(fh.read())
    assert all(isinstance(n.line, int) and n.line >= 1 for n in walk(tree))


@pytest.mark.parametrize("src, shape", [
    ("$a = $b || $c && $d;", ("||", "b", ("&&", "c", "d"))),
    ("$a = $b && $c == $d;", ("&&", "b", ("==", "c", "d"))),
    ("$a = $b == $c . $d;", ("==", "b", (".", "c", "d"))),
    ("$a = $b . $c * $d;", (".", "b", ("*", "c", "d"))),
    ("$a = $b + $c . $d;", (".", ("+", "b", "c"), "d")),
    ("$a = $b * -$c;", ("*", "b", ("-", "c"))),
])
def test_operator_precedence(src, shape):
    tree = parse_source("<?php " + src)
    assign = next(n for n in walk(tree) if isinstance(n, A.Assign))

    def shape_of(e):
        if isinstance(e, A.Var):
            return e.name
        if isinstance(e, A.Binary):
            return (e.op, shape_of(e.left), shape_of(e.right))
        if isinstance(e, A.Unary):
            return (e.op, shape_of(e.operand))
        raise AssertionError(e)
    assert shape_of(assign.value) == shape


def test_ternary_binds_looser_than_or():
    tree = parse_source("<?php $a = $b || $c ? $d : $e;")
    tern = next(n for n in walk(tree) if isinstance(n, A.Ternary))
    assert isinstance(tern.cond, A.Binary) and tern.cond.op == "||"


# ---------------------------------------------------------------- lowering

def test_if_lowers_to_jmpz_over_then_block():
    main, _, _ = compile_source("<?php if($c){echo 1;}", "/t.php")
    o = main.oplines
    assert o[0].opcode is K.JMPZ and o[0].op1 == CV("c")
    assert o[1].opcode is K.ECHO
    assert o[0].op2.value == 2


def test_listing6_loop_shape():
    with open(os.path.join(LISTINGS, "listing6.php"), "rb") as fh:
        main, _, _ = compile_source(fh.read(), "/l6.php")
    backs = [(i, o) for i, o in enumerate(main.oplines)
             if o.opcode is K.JMP and o.op1.value < i]
    assert len(backs) == 1
    head = backs[0][1].op1.value
    exits = [o for o in main.oplines[head:] if o.opcode in (K.JMPZ, K.JMPNZ)
             and o.op2.value > backs[0][0]]
    assert exits, "loop condition must branch past the back edge"


def test_listing1_dynamic_call():
    with open(os.path.join(LISTINGS, "listing1", "vulnerabilities", "xss_r", "index.php"), "rb") as fh:
        main, _, _ = compile_source(fh.read(), "/l1.php")
    line11 = [o for o in main.oplines if o.source_line == 11 and o.opcode is not K.RETURN]
    assert [o.opcode for o in line11] == [K.INIT_DYNAMIC_CALL, K.SEND_VAR, K.DO_FCALL]
    assert line11[0].op1 == CV("func") and line11[1].op1 == CV("page")


def test_variable_variable_fetches_through_a_temp():
    main, _, _ = compile_source('<?php $x = "a"; echo $$x;', "/t.php")
    fetch = next(o for o in main.oplines if o.opcode is K.FETCH_R)
    assert fetch.op1.kind is OperandKind.TEMP


def test_foreach_lowers_to_fe_reset_and_fe_fetch():
    main, _, _ = compile_source("<?php foreach ($a as $k => $v) { echo $v; }", "/t.php")
    assert K.FE_RESET in ops(main) and K.FE_FETCH in ops(main)


def test_switch_lowers_to_case_chain():
    main, _, _ = compile_source("<?php switch($a) { case 1: echo 1; break; case 2: echo 2; }",
                                "/t.php")
    assert ops(main).count(K.CASE) == 2


def test_includes_share_one_opcode_with_flavor_in_ext():
    main, _, _ = compile_source("<?php include 'a'; include_once 'a'; require 'a'; require_once 'a';",
                                "/t.php")
    incs = [o.extended_value for o in main.oplines if o.opcode is K.INCLUDE_OR_EVAL]
    assert len(set(incs)) == 4


def test_interpolation_lowers_to_concat_chain():
    main, _, _ = compile_source('<?php $s = "a{$x}b{$y}";', "/t.php")
    assert ops(main).count(K.CONCAT) >= 3


@pytest.mark.parametrize("src, construct", [
    ("<?php $f = function() {};", "closure"),
    ("<?php goto a; a:", "goto"),
    ("<?php try { f(); } catch (Exception $e) {}", "try"),
    ("<?php $f = fn($x) => $x;", "arrow function"),
    ("<?php class A { function __toString() { return ''; } }", "__tostring"),
])
def test_unsupported_constructs_are_rejected(src, construct):
    with pytest.raises((LowerError, ParseError)) as e:
        compile_source(src, "/t.php")
    assert construct.lower() in str(e.value).lower() or isinstance(e.value, ParseError)


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: os.path.relpath(p, CORPUS))
def test_corpus_lowering_is_valid_and_deterministic(path):
    with open(path, "rb") as fh:
        src = fh.read()
    main, funcs, classes = compile_source(src, path)
    units = [main] + list(funcs) + [m for cm in classes for m in cm.methods.values()]
    for u in units:
        assert validate_unit(u) == [], u.name
    again = compile_source(src, path)
    assert write_dump([main] + list(funcs), classes) == write_dump([again[0]] + list(again[1]),
                                                                   again[2])


def test_opline_lines_match_statement_lines():
    main, _, _ = compile_source("<?php\n$a = 1;\n\necho $a;\nfoo(\n  $a\n);\n", "/t.php")
    got = [(o.opcode, o.source_line) for o in main.oplines]
    assert got[:2] == [(K.ASSIGN, 2), (K.ECHO, 4)]
    assert (K.SEND_VAR, 6) in got
