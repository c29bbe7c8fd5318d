import pytest
from hypothesis import given, strategies as st

from opflow.frontend import compile_source
from opflow.ir import (C, CV, J, T, UNUSED, V, ArrayLit, ClassMeta, IRError, Operand,
                       OperandKind, OpcodeKind, Opline, OpUnit, ParamMeta, ProgramDb, TypeTag,
                       UnitKind, opline_violations, validate_unit)


def test_cv_names_are_nonempty_and_unsigiled():
    with pytest.raises(IRError):
        CV("")
    with pytest.raises(IRError):
        CV("$a")
    assert CV("a").value == "a"


def test_array_literal_keys_are_int_or_str():
    with pytest.raises(IRError):
        C(ArrayLit(((1.5, 1),)))
    C(ArrayLit(((0, 1), ("k", "v"))))


def test_jump_target_out_of_range_is_diagnosed():
    unit = OpUnit("f", UnitKind.FUNCTION, [Opline(OpcodeKind.JMP, J(1))])
    assert validate_unit(unit) == [(0, "jump target out of range")]


def test_empty_unit_is_valid():
    assert validate_unit(OpUnit("f", UnitKind.FUNCTION)) == []


def test_lowered_program_is_valid():
    main, funcs, classes = compile_source("<?php $a = 1; echo $a;", "/x.php")
    assert validate_unit(main) == []


def test_file_main_has_no_params():
    unit = OpUnit("/x.php", UnitKind.FILE_MAIN, [], [ParamMeta("p")])
    assert validate_unit(unit) == [(-1, "FILE_MAIN units have no params")]


def test_only_last_param_may_be_variadic():
    unit = OpUnit("f", UnitKind.FUNCTION, [], [ParamMeta("a", is_variadic=True), ParamMeta("b")])
    assert validate_unit(unit) == [(-1, "only the last param may be variadic")]


def test_inheritance_cycle_detected():
    db = ProgramDb()
    db.classes = {"a": ClassMeta("A", "B"), "b": ClassMeta("B", "A")}
    assert db.check_inheritance()


def test_every_opcode_has_exactly_one_type_tag():
    for kind in OpcodeKind:
        assert isinstance(kind.tag, TypeTag)
    assert OpcodeKind.INIT_ARRAY.tag is TypeTag.ARRAY
    assert OpcodeKind.ADD_ARRAY_ELEMENT.tag is TypeTag.ARRAY
    assert OpcodeKind.NEW.tag is TypeTag.OBJECT
    assert OpcodeKind.ASSIGN_OBJ.tag is TypeTag.OBJECT


def test_conditional_jumps_carry_one_target():
    with pytest.raises(IRError):
        Opline(OpcodeKind.JMPZ, CV("c"), CV("d"))
    with pytest.raises(IRError):
        Opline(OpcodeKind.JMP, J(0), J(0))
    with pytest.raises(IRError):
        Opline(OpcodeKind.ECHO, J(0))


_FILLERS = {
    "unused": UNUSED, "cv": CV("x"), "temp": T(0), "var": V(1), "const": C(1), "jump": J(0),
}


@given(st.sampled_from(list(OpcodeKind)), st.sampled_from(sorted(_FILLERS)),
       st.sampled_from(sorted(_FILLERS)), st.sampled_from(sorted(_FILLERS)))
def test_arity_contract_enforced_at_construction(kind, a, b, r):
    op1, op2, res = _FILLERS[a], _FILLERS[b], _FILLERS[r]
    problems = opline_violations(kind, op1, op2, res, 1)
    expect_ok = True
    for slot, operand, allowed in zip(("op1", "op2", "result"), (op1, op2, res), kind.arity):
        if allowed == "-" and operand.used:
            expect_ok = False
        is_jump = operand.kind is OperandKind.JUMP
        if is_jump != (slot == kind.jump_slot):
            expect_ok = False
    if res.kind in (OperandKind.CONST, OperandKind.JUMP):
        expect_ok = False
    if kind is OpcodeKind.JMP and (op2.used or res.used):
        expect_ok = False
    assert (problems == []) == expect_ok
    if expect_ok:
        Opline(kind, op1, op2, res)
    else:
        with pytest.raises(IRError):
            Opline(kind, op1, op2, res)


def test_operand_equality_distinguishes_literal_types():
    assert C(1) != C(True)
    assert C(1) != C(1.0)
    assert C("1") != C(1)
    assert C(1) == Operand(OperandKind.CONST, 1)


def test_program_db_lookup_is_case_insensitive():
    main, funcs, classes = compile_source(
        "<?php function MyFunc() {} class Foo { public $Bar; }", "/x.php")
    db = ProgramDb()
    db.add_file("/x.php", main, funcs, classes)
    assert "myfunc" in db.functions and "foo" in db.classes
    assert "Bar" in db.classes["foo"].properties
