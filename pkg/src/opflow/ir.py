"""Three-address opcode IR shared by every stage of the analyzer.

An ``Opline`` mirrors a Zend VM instruction: an opcode, two input operands,
a result operand and an integer extension.  Oplines are grouped into an
``OpUnit`` (a file's top level, a function, or a method), and units plus
class metadata live in a ``ProgramDb``.

PHP strings are byte strings.  They are represented here as Python ``str``
values decoded as latin-1, so that every byte maps to exactly one code point
and slicing/length agree with PHP.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Union


class IRError(ValueError):
    """Raised when an opline or operand violates its static contract."""


# --------------------------------------------------------------------------
# Literals

@dataclass(frozen=True, eq=False)
class ArrayLit:
    """An ordered PHP array literal.  Keys are ``int`` or ``str`` only."""

    items: tuple = ()

    def __post_init__(self):
        seen = set()
        for pair in self.items:
            if not (isinstance(pair, tuple) and len(pair) == 2):
                raise IRError("array literal items must be (key, value) pairs")
            k, v = pair
            if isinstance(k, bool) or not isinstance(k, (int, str)):
                raise IRError(f"array literal key must be int or str, got {k!r}")
            if k in seen:
                raise IRError(f"duplicate array literal key {k!r}")
            seen.add(k)
            check_literal(v)

    def __eq__(self, other):
        return isinstance(other, ArrayLit) and lit_key(self) == lit_key(other)

    def __hash__(self):
        return hash(lit_key(self))

    def get(self, key, default=None):
        for k, v in self.items:
            if k == key:
                return v
        return default

    def keys(self):
        return [k for k, _ in self.items]

    def values(self):
        return [v for _, v in self.items]

    def __len__(self):
        return len(self.items)

    @staticmethod
    def from_list(values) -> "ArrayLit":
        return ArrayLit(tuple(enumerate(values)))


Literal = Union[None, bool, int, float, str, ArrayLit]


def check_literal(v) -> None:
    if v is None or isinstance(v, (bool, int, float, str, ArrayLit)):
        return
    raise IRError(f"not a literal: {v!r}")


def lit_key(v):
    """Type-tagged hashable key so that ``True``, ``1`` and ``1.0`` differ."""
    if v is None:
        return ("n",)
    if isinstance(v, bool):
        return ("b", v)
    if isinstance(v, int):
        return ("i", v)
    if isinstance(v, float):
        if math.isnan(v):
            return ("f", "nan")
        return ("f", v)
    if isinstance(v, str):
        return ("s", v)
    if isinstance(v, ArrayLit):
        return ("a", tuple((lit_key(k), lit_key(x)) for k, x in v.items))
    raise IRError(f"not a literal: {v!r}")


def lit_eq(a, b) -> bool:
    return lit_key(a) == lit_key(b)


# --------------------------------------------------------------------------
# Operands

class OperandKind(enum.Enum):
    CV = "CV"
    TEMP = "TEMP"
    VAR = "VAR"
    CONST = "CONST"
    JUMP = "JUMP"
    UNUSED = "UNUSED"


@dataclass(frozen=True, eq=False)
class Operand:
    kind: OperandKind
    value: object = None

    def __post_init__(self):
        k, v = self.kind, self.value
        if k is OperandKind.CV:
            if not isinstance(v, str) or not v or v.startswith("$"):
                raise IRError(f"bad compiled-variable name {v!r}")
        elif k in (OperandKind.TEMP, OperandKind.VAR, OperandKind.JUMP):
            if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                raise IRError(f"{k.value} operand needs a non-negative index, got {v!r}")
        elif k is OperandKind.CONST:
            check_literal(v)
        elif v is not None:
            raise IRError("UNUSED operand carries no value")

    def _key(self):
        if self.kind is OperandKind.CONST:
            return (self.kind, lit_key(self.value))
        return (self.kind, self.value)

    def __eq__(self, other):
        return isinstance(other, Operand) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        k = self.kind
        if k is OperandKind.CV:
            return f"CV(${self.value})"
        if k is OperandKind.TEMP:
            return f"T{self.value}"
        if k is OperandKind.VAR:
            return f"V{self.value}"
        if k is OperandKind.CONST:
            return f"C({self.value!r})"
        if k is OperandKind.JUMP:
            return f"->%{self.value}"
        return "-"

    @property
    def used(self) -> bool:
        return self.kind is not OperandKind.UNUSED

    @property
    def is_value(self) -> bool:
        return self.kind in (OperandKind.CV, OperandKind.TEMP, OperandKind.VAR, OperandKind.CONST)


UNUSED = Operand(OperandKind.UNUSED)


def CV(name: str) -> Operand:
    return Operand(OperandKind.CV, name)


def T(n: int) -> Operand:
    return Operand(OperandKind.TEMP, n)


def V(n: int) -> Operand:
    return Operand(OperandKind.VAR, n)


def C(lit) -> Operand:
    return Operand(OperandKind.CONST, lit)


def J(index: int) -> Operand:
    return Operand(OperandKind.JUMP, index)


# --------------------------------------------------------------------------
# Opcodes

class TypeTag(enum.Enum):
    SCALAR = "scalar"
    ARRAY = "array"
    OBJECT = "object"
    ANY = "any"
    CONTROL = "control"


class OpcodeKind(enum.Enum):
    """Opcode set.  Each member carries ``(arity, tag, jump_slot)``.

    ``arity`` is a three-character mask over op1/op2/result: ``'x'`` means the
    slot may be non-UNUSED, ``'-'`` means it must be UNUSED.  ``jump_slot``
    names the operand holding the JUMP_TARGET for jump opcodes.
    """

    NOP = ("---", TypeTag.CONTROL, None)
    ASSIGN = ("xxx", TypeTag.ANY, None)
    ASSIGN_DIM = ("xxx", TypeTag.ARRAY, None)
    ASSIGN_OBJ = ("xxx", TypeTag.OBJECT, None)
    ASSIGN_CONCAT = ("xxx", TypeTag.SCALAR, None)
    OP_DATA = ("x--", TypeTag.ANY, None)
    QM_ASSIGN = ("x-x", TypeTag.ANY, None)
    CONCAT = ("xxx", TypeTag.SCALAR, None)
    ADD = ("xxx", TypeTag.SCALAR, None)
    SUB = ("xxx", TypeTag.SCALAR, None)
    MUL = ("xxx", TypeTag.SCALAR, None)
    DIV = ("xxx", TypeTag.SCALAR, None)
    MOD = ("xxx", TypeTag.SCALAR, None)
    POW = ("xxx", TypeTag.SCALAR, None)
    BW_OR = ("xxx", TypeTag.SCALAR, None)
    BW_AND = ("xxx", TypeTag.SCALAR, None)
    BW_XOR = ("xxx", TypeTag.SCALAR, None)
    BW_NOT = ("x-x", TypeTag.SCALAR, None)
    SL = ("xxx", TypeTag.SCALAR, None)
    SR = ("xxx", TypeTag.SCALAR, None)
    SPACESHIP = ("xxx", TypeTag.SCALAR, None)
    IS_EQUAL = ("xxx", TypeTag.SCALAR, None)
    IS_NOT_EQUAL = ("xxx", TypeTag.SCALAR, None)
    IS_IDENTICAL = ("xxx", TypeTag.SCALAR, None)
    IS_NOT_IDENTICAL = ("xxx", TypeTag.SCALAR, None)
    IS_SMALLER = ("xxx", TypeTag.SCALAR, None)
    IS_SMALLER_OR_EQUAL = ("xxx", TypeTag.SCALAR, None)
    BOOL_AND = ("xxx", TypeTag.SCALAR, None)
    BOOL_OR = ("xxx", TypeTag.SCALAR, None)
    BOOL_XOR = ("xxx", TypeTag.SCALAR, None)
    BOOL_NOT = ("x-x", TypeTag.SCALAR, None)
    BOOL = ("x-x", TypeTag.SCALAR, None)
    CAST = ("x-x", TypeTag.ANY, None)
    PRE_INC = ("x-x", TypeTag.SCALAR, None)
    PRE_DEC = ("x-x", TypeTag.SCALAR, None)
    POST_INC = ("x-x", TypeTag.SCALAR, None)
    POST_DEC = ("x-x", TypeTag.SCALAR, None)
    JMP = ("x--", TypeTag.CONTROL, "op1")
    JMPZ = ("xx-", TypeTag.CONTROL, "op2")
    JMPNZ = ("xx-", TypeTag.CONTROL, "op2")
    CASE = ("xxx", TypeTag.SCALAR, None)
    INSTANCEOF = ("xxx", TypeTag.OBJECT, None)
    INIT_ARRAY = ("xxx", TypeTag.ARRAY, None)
    ADD_ARRAY_ELEMENT = ("xxx", TypeTag.ARRAY, None)
    FETCH_DIM_R = ("xxx", TypeTag.ARRAY, None)
    FETCH_DIM_W = ("xxx", TypeTag.ARRAY, None)
    FETCH_OBJ_R = ("xxx", TypeTag.OBJECT, None)
    FETCH_OBJ_W = ("xxx", TypeTag.OBJECT, None)
    FETCH_R = ("x-x", TypeTag.ANY, None)
    FETCH_W = ("x-x", TypeTag.ANY, None)
    FETCH_CONSTANT = ("-xx", TypeTag.ANY, None)
    DECLARE_CONST = ("xxx", TypeTag.ANY, None)
    NEW = ("x-x", TypeTag.OBJECT, None)
    INIT_FCALL = ("-x-", TypeTag.CONTROL, None)
    INIT_DYNAMIC_CALL = ("x--", TypeTag.CONTROL, None)
    INIT_METHOD_CALL = ("xx-", TypeTag.OBJECT, None)
    INIT_STATIC_METHOD_CALL = ("xx-", TypeTag.CONTROL, None)
    SEND_VAL = ("xx-", TypeTag.ANY, None)
    SEND_VAR = ("xx-", TypeTag.ANY, None)
    SEND_REF = ("xx-", TypeTag.ANY, None)
    SEND_UNPACK = ("xx-", TypeTag.ARRAY, None)
    DO_FCALL = ("--x", TypeTag.ANY, None)
    RECV = ("x-x", TypeTag.ANY, None)
    RECV_INIT = ("xxx", TypeTag.ANY, None)
    RECV_VARIADIC = ("x-x", TypeTag.ARRAY, None)
    RETURN = ("x--", TypeTag.CONTROL, None)
    ECHO = ("x--", TypeTag.SCALAR, None)
    EXIT = ("x--", TypeTag.CONTROL, None)
    INCLUDE_OR_EVAL = ("x-x", TypeTag.ANY, None)
    ISSET_ISEMPTY = ("xxx", TypeTag.SCALAR, None)
    UNSET = ("xx-", TypeTag.ANY, None)
    FE_RESET = ("x-x", TypeTag.ARRAY, None)
    FE_FETCH = ("xxx", TypeTag.ARRAY, "op2")
    FE_KEY = ("x-x", TypeTag.ARRAY, None)
    BIND_GLOBAL = ("xx-", TypeTag.ANY, None)
    BIND_STATIC = ("x--", TypeTag.ANY, None)

    def __new__(cls, arity, tag, jump_slot):
        obj = object.__new__(cls)
        obj._value_ = len(cls.__members__) + 1
        obj.arity = arity
        obj.tag = tag
        obj.jump_slot = jump_slot
        return obj

    @property
    def is_jump(self) -> bool:
        """Opcodes that end a basic block (rule c); RETURN and EXIT included."""
        return self.jump_slot is not None or self in _TERMINATORS

    @property
    def is_terminal(self) -> bool:
        return self in _TERMINATORS


_TERMINATORS = frozenset({OpcodeKind.RETURN, OpcodeKind.EXIT})

OPCODES = {k.name: k for k in OpcodeKind}

# extended_value encodings
INC_INCLUDE, INC_INCLUDE_ONCE, INC_REQUIRE, INC_REQUIRE_ONCE, INC_EVAL = 1, 2, 3, 4, 5
FETCH_LOCAL, FETCH_GLOBAL = 0, 1
ISSET_EMPTY, ISSET_DIM, ISSET_OBJ = 1, 2, 4
CAST_INT, CAST_FLOAT, CAST_STRING, CAST_BOOL, CAST_ARRAY, CAST_OBJECT = 1, 2, 3, 4, 5, 6
UNSET_VAR, UNSET_DIM, UNSET_OBJ = 0, 2, 4

_RESULT_KINDS = (OperandKind.CV, OperandKind.TEMP, OperandKind.VAR, OperandKind.UNUSED)


def opline_violations(opcode: OpcodeKind, op1: Operand, op2: Operand, result: Operand,
                      source_line: int) -> list:
    """Static contract violations of one opline (empty when well formed)."""
    problems = []
    slots = (("op1", op1), ("op2", op2), ("result", result))
    for (slot, operand), allowed in zip(slots, opcode.arity):
        if allowed == "-" and operand.used:
            problems.append(f"{opcode.name} requires {slot} to be UNUSED")
    if result.kind not in _RESULT_KINDS:
        problems.append("result must be CV, TEMP, VAR or UNUSED")
    jumps = [slot for slot, operand in slots if operand.kind is OperandKind.JUMP]
    if opcode.jump_slot is None:
        if jumps:
            problems.append(f"{opcode.name} cannot carry a jump target")
    else:
        if jumps != [opcode.jump_slot]:
            problems.append(f"{opcode.name} must carry exactly one jump target in {opcode.jump_slot}")
        if opcode is OpcodeKind.JMP and (op2.used or result.used):
            problems.append("JMP carries no value operands")
    if isinstance(source_line, bool) or not isinstance(source_line, int) or source_line < 1:
        problems.append("source_line must be a positive int")
    return problems


@dataclass(frozen=True)
class Opline:
    opcode: OpcodeKind
    op1: Operand = UNUSED
    op2: Operand = UNUSED
    result: Operand = UNUSED
    extended_value: int = 0
    source_line: int = 1

    def __post_init__(self):
        problems = opline_violations(self.opcode, self.op1, self.op2, self.result, self.source_line)
        if problems:
            raise IRError("; ".join(problems))

    def jump_target(self) -> Optional[int]:
        slot = self.opcode.jump_slot
        if slot is None:
            return None
        return getattr(self, slot).value


# --------------------------------------------------------------------------
# Units and program database

class UnitKind(enum.Enum):
    FILE_MAIN = "FILE_MAIN"
    FUNCTION = "FUNCTION"
    METHOD = "METHOD"


@dataclass(frozen=True)
class ParamMeta:
    name: str
    is_ref: bool = False
    is_variadic: bool = False
    default: object = None
    has_default: bool = False

    def __eq__(self, other):
        return (isinstance(other, ParamMeta) and self.name == other.name
                and self.is_ref == other.is_ref and self.is_variadic == other.is_variadic
                and self.has_default == other.has_default
                and lit_key(self.default) == lit_key(other.default))

    def __hash__(self):
        return hash((self.name, self.is_ref, self.is_variadic))


@dataclass
class OpUnit:
    name: str
    kind: UnitKind
    oplines: list = field(default_factory=list)
    params: list = field(default_factory=list)
    statics: dict = field(default_factory=dict)
    owner_class: Optional[str] = None
    file: str = ""
    is_static: bool = False

    def __eq__(self, other):
        if not isinstance(other, OpUnit):
            return NotImplemented
        return (self.name == other.name and self.kind == other.kind
                and self.oplines == other.oplines and self.params == other.params
                and _lit_map_key(self.statics) == _lit_map_key(other.statics)
                and self.owner_class == other.owner_class and self.file == other.file
                and self.is_static == other.is_static)

    __hash__ = object.__hash__


def _lit_map_key(m: dict):
    return tuple((k, lit_key(v)) for k, v in m.items())


@dataclass
class PropMeta:
    default: object = None
    is_static: bool = False

    def __eq__(self, other):
        return (isinstance(other, PropMeta) and self.is_static == other.is_static
                and lit_key(self.default) == lit_key(other.default))


@dataclass
class ClassMeta:
    name: str
    parent: Optional[str] = None
    properties: dict = field(default_factory=dict)   # name -> PropMeta
    methods: dict = field(default_factory=dict)      # lowercase name -> OpUnit
    traits: list = field(default_factory=list)
    is_trait: bool = False
    file: str = ""


@dataclass
class ProgramDb:
    """All compiled units.  Treated as immutable once loading finishes."""

    files: dict = field(default_factory=dict)        # path -> FILE_MAIN OpUnit
    functions: dict = field(default_factory=dict)    # lowercase name -> OpUnit
    classes: dict = field(default_factory=dict)      # lowercase name -> ClassMeta
    file_functions: dict = field(default_factory=dict)  # path -> {lname: OpUnit}
    file_classes: dict = field(default_factory=dict)    # path -> {lname: ClassMeta}
    errors: dict = field(default_factory=dict)       # path -> message

    def add_file(self, path: str, main: OpUnit, functions, classes) -> list:
        """Register one compiled file; returns diagnostics for name collisions."""
        notes = []
        self.files[path] = main
        funcs = self.file_functions.setdefault(path, {})
        for fn in functions:
            lname = fn.name.lower()
            funcs[lname] = fn
            if lname in self.functions:
                notes.append(f"function {fn.name} redeclared in {path}")
            else:
                self.functions[lname] = fn
        cls_map = self.file_classes.setdefault(path, {})
        for cm in classes:
            lname = cm.name.lower()
            cls_map[lname] = cm
            if lname in self.classes:
                notes.append(f"class {cm.name} redeclared in {path}")
            else:
                self.classes[lname] = cm
        return notes

    def all_units(self):
        for unit in self.files.values():
            yield unit
        for funcs in self.file_functions.values():
            yield from funcs.values()
        for classes in self.file_classes.values():
            for cm in classes.values():
                yield from cm.methods.values()

    def check_inheritance(self) -> list:
        problems = []
        for cm in self.classes.values():
            seen = {cm.name.lower()}
            cur = cm.parent
            while cur is not None:
                key = cur.lower()
                if key in seen:
                    problems.append(f"inheritance cycle through {cm.name}")
                    break
                seen.add(key)
                nxt = self.classes.get(key)
                cur = nxt.parent if nxt else None
        return problems


def validate_unit(unit: OpUnit) -> list:
    """Return diagnostics ``(index, rule)`` for every invariant violation."""
    diags = []
    n = len(unit.oplines)
    for i, op in enumerate(unit.oplines):
        for problem in opline_violations(op.opcode, op.op1, op.op2, op.result, op.source_line):
            diags.append((i, problem))
        for operand in (op.op1, op.op2, op.result):
            if operand.kind is OperandKind.JUMP and operand.value >= n:
                diags.append((i, "jump target out of range"))
    if unit.kind is UnitKind.FILE_MAIN and unit.params:
        diags.append((-1, "FILE_MAIN units have no params"))
    variadic = [i for i, p in enumerate(unit.params) if p.is_variadic]
    if len(variadic) > 1 or (variadic and variadic[0] != len(unit.params) - 1):
        diags.append((-1, "only the last param may be variadic"))
    return diags
