import glob
import os
import random

import pytest
from hypothesis import given, settings, strategies as st

from _cfglaws import cfg_violations, random_unit
from conftest import CORPUS
from opflow.cfg import CfgError, EdgeKind, back_edges, build_cfg, dump_cfg_dot, leaders
from opflow.frontend import compile_source
from opflow.ir import C, CV, J, UNUSED, OpcodeKind as K, Opline, OpUnit, UnitKind

CORPUS_FILES = sorted(glob.glob(os.path.join(CORPUS, "**", "*.php"), recursive=True))


def unit_of(*rows):
    ops = [Opline(k, a, b, UNUSED, 0, 1) for k, a, b in rows]
    return OpUnit("u", UnitKind.FUNCTION, ops)


def diamond():
    return unit_of((K.JMPZ, CV("c"), J(3)), (K.ECHO, C("t"), UNUSED), (K.JMP, J(4), UNUSED),
                   (K.ECHO, C("f"), UNUSED), (K.RETURN, C(None), UNUSED))


def test_diamond_leaders_and_edges():
    u = diamond()
    assert leaders(u) == [0, 1, 3, 4]
    cfg = build_cfg(u)
    assert [(b.start, b.end_exclusive) for b in cfg.blocks] == [(0, 1), (1, 3), (3, 4), (4, 5)]
    assert cfg.blocks[0].successors == [(1, EdgeKind.BRANCH_TRUE), (2, EdgeKind.BRANCH_FALSE)]
    assert cfg.blocks[1].successors == [(3, EdgeKind.JUMP)]
    assert cfg.blocks[2].successors == [(3, EdgeKind.FALLTHROUGH)]
    assert cfg.blocks[3].successors == []
    assert back_edges(cfg) == []


def test_jmpnz_edge_polarity():
    u = unit_of((K.JMPNZ, CV("c"), J(2)), (K.ECHO, C(1), UNUSED), (K.RETURN, C(None), UNUSED))
    cfg = build_cfg(u)
    assert cfg.blocks[0].successors == [(2, EdgeKind.BRANCH_TRUE), (1, EdgeKind.BRANCH_FALSE)]


def test_straight_line_is_one_block():
    u = unit_of((K.ECHO, C(1), UNUSED), (K.ECHO, C(2), UNUSED))
    cfg = build_cfg(u)
    assert len(cfg.blocks) == 1 and cfg.blocks[0].successors == []


def test_empty_unit():
    cfg = build_cfg(OpUnit("e", UnitKind.FUNCTION, []))
    assert len(cfg.blocks) == 1 and len(cfg.blocks[0]) == 0


def test_jump_beyond_end_is_rejected():
    u = unit_of((K.JMP, J(5), UNUSED))
    with pytest.raises(CfgError):
        build_cfg(u)


def test_predecessors_invert_successors():
    cfg = build_cfg(diamond())
    assert cfg.predecessors()[3] == [(1, EdgeKind.JUMP), (2, EdgeKind.FALLTHROUGH)]


def test_listing6_has_one_back_edge():
    with open(os.path.join(CORPUS, "listings", "listing6.php"), "rb") as fh:
        main, _, _ = compile_source(fh.read(), "/l6.php")
    cfg = build_cfg(main)
    (edge,) = back_edges(cfg)
    src, dst = edge
    assert cfg.blocks[src].successors == [(dst, EdgeKind.JUMP)]


def test_dot_output_is_exact():
    dot = dump_cfg_dot(build_cfg(diamond())).decode()
    assert dot == (
        'digraph "u" {\n'
        "  node [shape=box];\n"
        '  B0 [label="B0 [0..1)"];\n'
        '  B1 [label="B1 [1..3)"];\n'
        '  B2 [label="B2 [3..4)"];\n'
        '  B3 [label="B3 [4..5)"];\n'
        '  B0 -> B1 [label="BRANCH_TRUE"];\n'
        '  B0 -> B2 [label="BRANCH_FALSE"];\n'
        '  B1 -> B3 [label="JUMP"];\n'
        '  B2 -> B3 [label="FALLTHROUGH"];\n'
        "}\n")


def test_dot_escapes_unit_names():
    u = OpUnit('A\\b"c', UnitKind.FUNCTION, [])
    assert dump_cfg_dot(build_cfg(u)).startswith(b'digraph "A\\\\b\\"c" {')


def _corpus_units():
    for path in CORPUS_FILES:
        with open(path, "rb") as fh:
            main, funcs, classes = compile_source(fh.read(), path)
        yield main
        yield from funcs
        for cm in classes:
            yield from cm.methods.values()


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: os.path.relpath(p, CORPUS))
def test_laws_hold_on_corpus(path):
    with open(path, "rb") as fh:
        main, funcs, classes = compile_source(fh.read(), path)
    units = [main] + list(funcs) + [m for cm in classes for m in cm.methods.values()]
    for u in units:
        assert cfg_violations(u) == [], u.name


@settings(max_examples=300)
@given(st.integers(0, 2**32))
def test_laws_hold_on_random_units(seed):
    assert cfg_violations(random_unit(random.Random(seed))) == []


def test_laws_hold_on_ten_thousand_fuzzed_units():
    r = random.Random(1)
    bad = [(i, v) for i in range(10_000) for v in [cfg_violations(random_unit(r))] if v]
    assert bad == []


def test_law_checker_catches_a_broken_cfg(monkeypatch):
    import opflow.cfg as cfgmod
    real = cfgmod.leaders
    monkeypatch.setattr(cfgmod, "leaders", lambda u: [s for s in real(u) if s != 3])
    import _cfglaws
    monkeypatch.setattr(_cfglaws, "build_cfg", cfgmod.build_cfg)
    assert cfg_violations(diamond())
