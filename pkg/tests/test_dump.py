import glob
import math
import os

import pytest
from hypothesis import given, settings, strategies as st

from conftest import CORPUS
from opflow.dump import (VERSION_LINE, DumpError, format_literal, parse_literal, read_dump,
                         write_dump)
from opflow.engine import Analyzer
from opflow.frontend import compile_source
from opflow.ir import ArrayLit, OpcodeKind as K
from opflow.project import load_project
from opflow.vectors import same

HERE = os.path.dirname(__file__)
CORPUS_FILES = sorted(glob.glob(os.path.join(CORPUS, "**", "*.php"), recursive=True))

ECHO_DUMP = f"""{VERSION_LINE}
== unit FILE_MAIN /t.php
file /t.php
0  1  ECHO  C(s:"hi")  -  -  0
1  1  RETURN  C(i:1)  -  -  0
"""


def test_minimal_dump_reads():
    units, classes = read_dump(ECHO_DUMP.encode())
    assert classes == []
    (u,) = units
    assert [o.opcode for o in u.oplines] == [K.ECHO, K.RETURN]
    assert u.oplines[0].op1.value == "hi"


def test_write_is_stable_under_reread():
    units, classes = read_dump(ECHO_DUMP)
    assert write_dump(units, classes).decode() == ECHO_DUMP


def test_dangling_jump_target():
    bad = ECHO_DUMP.replace("0  1  ECHO  C(s:\"hi\")  -  -  0", "0  1  JMP  ->%999  -  -  0")
    with pytest.raises(DumpError) as e:
        read_dump(bad)
    assert "dangling jump target" in e.value.reason


def test_version_mismatch():
    with pytest.raises(DumpError) as e:
        read_dump(ECHO_DUMP.replace("v1", "v2"))
    assert e.value.line == 1 and e.value.reason == "version mismatch"


def test_unknown_mnemonic_reports_its_line():
    with pytest.raises(DumpError) as e:
        read_dump(ECHO_DUMP.replace("ECHO", "FROB"))
    assert e.value.line == 4


def test_out_of_sequence_index():
    with pytest.raises(DumpError):
        read_dump(ECHO_DUMP.replace("1  1  RETURN", "5  1  RETURN"))


@pytest.mark.parametrize("v", [None, True, False, 0, -7, 2**63 - 1, 1.5, -0.0, math.inf, -math.inf,
                               "", "a \"q\" \\ \n\x00\xff", ArrayLit(((0, 1), ("k", ArrayLit(())))),
                               ArrayLit(((5, "x"), (-1, None)))])
def test_literal_round_trip(v):
    assert same(parse_literal(format_literal(v)), v)


def test_nan_literal_round_trip():
    assert math.isnan(parse_literal(format_literal(math.nan)))


_scalars = st.one_of(st.none(), st.booleans(), st.integers(-2**63, 2**63 - 1),
                     st.floats(allow_nan=False), st.text(alphabet=st.characters(max_codepoint=255)))
_literals = st.recursive(
    _scalars,
    lambda inner: st.dictionaries(st.one_of(st.integers(-5, 5), st.text(alphabet=st.characters(max_codepoint=255), max_size=3).filter(
        lambda s: not s.isdigit() or s.startswith("0"))), inner, max_size=4).map(
        lambda d: ArrayLit(tuple(d.items()))),
    max_leaves=10)


@given(_literals)
def test_literal_round_trip_property(v):
    assert same(parse_literal(format_literal(v)), v)


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: os.path.relpath(p, CORPUS))
def test_corpus_dump_round_trip(path):
    with open(path, "rb") as fh:
        main, funcs, classes = compile_source(fh.read(), path)
    first = write_dump([main] + list(funcs), classes)
    units, classes2 = read_dump(first)
    assert write_dump(units, classes2) == first


@settings(max_examples=400)
@given(st.binary(max_size=300))
def test_reader_never_fails_unexpectedly_on_bytes(data):
    try:
        read_dump(data)
    except DumpError:
        pass


@settings(max_examples=400)
@given(st.lists(st.sampled_from(ECHO_DUMP.splitlines() + [
    "== unit FUNCTION f", "== class A extends -", "prop p static=0 default=null",
    "param x ref=0 variadic=0", "0  1  JMP  ->%0  -  -  0", "0  1  ECHO  C(a:[i:0=>s:\"x\"])  -  -  0",
    "owner A", "== unit METHOD m", "static_method", "0 1 ECHO", "garbage \"", ""]), max_size=12))
def test_reader_never_fails_unexpectedly_on_line_soup(lines):
    try:
        read_dump("\n".join([VERSION_LINE] + lines))
    except DumpError:
        pass


def test_handwritten_dump_matches_source_analysis(tmp_path):
    dump_proj = load_project([os.path.join(HERE, "data", "dump_listing5")])
    assert not dump_proj.db.errors
    (entry,) = dump_proj.sources
    from_dump = Analyzer(dump_proj.db).analyze_entry(entry)

    src = os.path.join(CORPUS, "listings", "listing5.php")
    target = tmp_path / "listing5.php"
    target.write_bytes(open(src, "rb").read())
    src_proj = load_project([str(tmp_path)])
    from_src = Analyzer(src_proj.db).analyze_entry(src_proj.sources[0])

    def shape(res):
        return [(f.vuln_class, os.path.basename(f.file), f.line, f.callee, f.arg)
                for f in res.findings]
    assert shape(from_dump) == shape(from_src) == [("XSS", "listing5.php", 5, "echo", 0)]
