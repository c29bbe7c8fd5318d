"""Textual opcode dump format (``.opcode`` files).

Grammar, one item per line::

    #opflow-dump v1
    == unit <FILE_MAIN|FUNCTION|METHOD> <name>
    file <path>                       (optional)
    owner <class>                     (METHOD only)
    static_method                     (optional flag)
    param <name> ref=<0|1> variadic=<0|1> [default=<literal>]
    static <name> <literal>
    <index>  <line>  <OPCODE>  <op1>  <op2>  <result>  <ext>
    == class <name> extends <parent|->
    file <path>
    trait <name>
    prop <name> static=<0|1> default=<literal>
    is_trait

Operands render as ``CV($name)``, ``T<n>``, ``V<n>``, ``C(<literal>)``,
``->%<index>`` and ``-``.  Literals are ``null``, ``b:true``, ``i:<int>``,
``f:<float>``, ``s:"<json string>"`` and ``a:[<key>=><literal>,...]``.
Methods are written as METHOD units after all class sections and are
re-attached to their class by ``owner`` on reading.
"""

from __future__ import annotations

import json
import math

from .ir import (ArrayLit, ClassMeta, IRError, OPCODES, Operand, OperandKind, Opline, OpUnit,
                 ParamMeta, PropMeta, UnitKind, validate_unit)

VERSION_LINE = "#opflow-dump v1"


class DumpError(ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"dump line {line}: {reason}")
        self.line = line
        self.reason = reason


# ---------------------------------------------------------------- literals

def format_literal(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "b:true" if v else "b:false"
    if isinstance(v, int):
        return f"i:{v}"
    if isinstance(v, float):
        if math.isnan(v):
            return "f:NAN"
        if math.isinf(v):
            return "f:INF" if v > 0 else "f:-INF"
        return f"f:{v!r}"
    if isinstance(v, str):
        return "s:" + json.dumps(v)
    if isinstance(v, ArrayLit):
        inner = ",".join(f"{format_literal(k)}=>{format_literal(x)}" for k, x in v.items)
        return f"a:[{inner}]"
    raise IRError(f"not a literal: {v!r}")


class _LitParser:
    def __init__(self, text: str):
        self.s = text
        self.i = 0

    def fail(self, why):
        raise ValueError(f"bad literal at offset {self.i}: {why}")

    def parse(self):
        v = self.value()
        if self.i != len(self.s):
            self.fail("trailing characters")
        return v

    def take(self, prefix):
        if self.s.startswith(prefix, self.i):
            self.i += len(prefix)
            return True
        return False

    def value(self):
        s = self.s
        if self.take("null"):
            return None
        if self.take("b:true"):
            return True
        if self.take("b:false"):
            return False
        if self.take("i:"):
            j = self.i
            if j < len(s) and s[j] == "-":
                j += 1
            while j < len(s) and s[j].isdigit():
                j += 1
            text = s[self.i:j]
            if text in ("", "-"):
                self.fail("expected integer")
            self.i = j
            return int(text)
        if self.take("f:"):
            j = self.i
            while j < len(s) and s[j] not in ",]=":
                j += 1
            text = s[self.i:j]
            self.i = j
            if text == "NAN":
                return math.nan
            if text in ("INF", "-INF"):
                return math.inf if text == "INF" else -math.inf
            try:
                return float(text)
            except ValueError:
                self.fail("expected float")
        if self.take("s:"):
            if self.i >= len(s) or s[self.i] != '"':
                self.fail("expected string")
            j = self.i + 1
            while j < len(s) and s[j] != '"':
                j += 2 if s[j] == "\\" else 1
            if j >= len(s):
                self.fail("unterminated string")
            try:
                out = json.loads(s[self.i:j + 1])
            except json.JSONDecodeError as exc:
                self.fail(str(exc))
            self.i = j + 1
            return out
        if self.take("a:["):
            items = []
            if self.take("]"):
                return ArrayLit(())
            while True:
                k = self.value()
                if not self.take("=>"):
                    self.fail("expected =>")
                items.append((k, self.value()))
                if self.take("]"):
                    break
                if not self.take(","):
                    self.fail("expected , or ]")
            try:
                return ArrayLit(tuple(items))
            except IRError as exc:
                self.fail(str(exc))
        self.fail("unknown literal")


def parse_literal(text: str):
    return _LitParser(text).parse()


# ---------------------------------------------------------------- operands

def format_operand(op: Operand) -> str:
    k = op.kind
    if k is OperandKind.CV:
        return f"CV(${op.value})"
    if k is OperandKind.TEMP:
        return f"T{op.value}"
    if k is OperandKind.VAR:
        return f"V{op.value}"
    if k is OperandKind.CONST:
        return f"C({format_literal(op.value)})"
    if k is OperandKind.JUMP:
        return f"->%{op.value}"
    return "-"


def _nonneg(text):
    if not text.isdigit():
        raise ValueError(f"bad index {text!r}")
    return int(text)


def parse_operand(text: str) -> Operand:
    if text == "-":
        return Operand(OperandKind.UNUSED)
    if text.startswith("CV($") and text.endswith(")"):
        return Operand(OperandKind.CV, text[4:-1])
    if text.startswith("C(") and text.endswith(")"):
        return Operand(OperandKind.CONST, parse_literal(text[2:-1]))
    if text.startswith("->%"):
        return Operand(OperandKind.JUMP, _nonneg(text[3:]))
    if text[:1] == "T":
        return Operand(OperandKind.TEMP, _nonneg(text[1:]))
    if text[:1] == "V":
        return Operand(OperandKind.VAR, _nonneg(text[1:]))
    raise ValueError(f"bad operand {text!r}")


def split_fields(line: str) -> list:
    """Whitespace split that keeps quoted strings and brackets intact."""
    out, cur, depth, in_str, esc = [], [], 0, False, False
    for ch in line:
        if in_str:
            cur.append(ch)
            if esc:
                esc = False
            elif ch == "\\":
                esc = True
            elif ch == '"':
                in_str = False
            continue
        if ch == '"':
            in_str = True
        elif ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch.isspace() and depth <= 0:
            if cur:
                out.append("".join(cur))
                cur = []
            continue
        cur.append(ch)
    if in_str:
        raise ValueError("unterminated string")
    if cur:
        out.append("".join(cur))
    return out


# ---------------------------------------------------------------- writer

def _write_unit(unit: OpUnit, out: list):
    out.append(f"== unit {unit.kind.value} {unit.name}")
    if unit.file:
        out.append(f"file {unit.file}")
    if unit.owner_class is not None:
        out.append(f"owner {unit.owner_class}")
    if unit.is_static:
        out.append("static_method")
    for p in unit.params:
        row = f"param {p.name} ref={int(p.is_ref)} variadic={int(p.is_variadic)}"
        if p.has_default:
            row += f" default={format_literal(p.default)}"
        out.append(row)
    for name, lit in unit.statics.items():
        out.append(f"static {name} {format_literal(lit)}")
    for i, op in enumerate(unit.oplines):
        out.append("  ".join([str(i), str(op.source_line), op.opcode.name,
                              format_operand(op.op1), format_operand(op.op2),
                              format_operand(op.result), str(op.extended_value)]))


def write_dump(units, classes=()) -> bytes:
    """Serialize units and classes.  Class methods are emitted as METHOD units."""
    out = [VERSION_LINE]
    for unit in units:
        _write_unit(unit, out)
    for cm in classes:
        out.append(f"== class {cm.name} extends {cm.parent or '-'}")
        if cm.file:
            out.append(f"file {cm.file}")
        for t in cm.traits:
            out.append(f"trait {t}")
        for name, pm in cm.properties.items():
            out.append(f"prop {name} static={int(pm.is_static)} default={format_literal(pm.default)}")
        if cm.is_trait:
            out.append("is_trait")
    for cm in classes:
        for unit in cm.methods.values():
            _write_unit(unit, out)
    return ("\n".join(out) + "\n").encode("utf-8")


# ---------------------------------------------------------------- reader

def _flag(text, name, lineno):
    prefix = name + "="
    if not text.startswith(prefix) or text[len(prefix):] not in ("0", "1"):
        raise DumpError(lineno, f"expected {name}=0|1")
    return text.endswith("1")


def read_dump(data) -> tuple:
    """Parse a dump.  Returns ``(units, classes)``; methods live on their class."""
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DumpError(1, f"not UTF-8: {exc.reason}") from None
    else:
        text = data
    lines = text.split("\n")
    if not lines or lines[0].strip() != VERSION_LINE:
        raise DumpError(1, "version mismatch")
    units, classes, methods = [], [], []
    cur_unit = cur_class = None
    unit_start = {}
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        try:
            fields = split_fields(line)
        except ValueError as exc:
            raise DumpError(lineno, str(exc)) from None
        head = fields[0]
        if line.startswith("== unit "):
            parts = line[len("== unit "):].split(" ", 1)
            if len(parts) != 2 or parts[0] not in UnitKind.__members__ or not parts[1]:
                raise DumpError(lineno, "malformed unit header")
            cur_unit = OpUnit(parts[1], UnitKind[parts[0]])
            unit_start[id(cur_unit)] = lineno
            cur_class = None
            (methods if cur_unit.kind is UnitKind.METHOD else units).append(cur_unit)
            continue
        if line.startswith("== class "):
            parts = line[len("== class "):].split(" ")
            if len(parts) != 3 or parts[1] != "extends":
                raise DumpError(lineno, "malformed class header")
            cur_class = ClassMeta(parts[0], None if parts[2] == "-" else parts[2])
            classes.append(cur_class)
            cur_unit = None
            continue
        if cur_class is not None:
            _class_row(cur_class, fields, line, lineno)
        elif cur_unit is not None:
            _unit_row(cur_unit, fields, line, lineno)
        else:
            raise DumpError(lineno, f"row outside of any section: {head}")
    by_name = {cm.name.lower(): cm for cm in classes}
    for unit in methods:
        owner = by_name.get((unit.owner_class or "").lower())
        if owner is None:
            raise DumpError(unit_start[id(unit)], "method unit without a declared owner class")
        owner.methods[unit.name.split("::")[-1].lower()] = unit
    for unit in units + methods:
        for idx, rule in validate_unit(unit):
            reason = "dangling jump target" if rule == "jump target out of range" else rule
            raise DumpError(unit_start[id(unit)], f"unit {unit.name} opline {idx}: {reason}")
    return units, classes


def _unit_row(unit, fields, line, lineno):
    head = fields[0]
    if head.isdigit():
        if len(fields) != 7:
            raise DumpError(lineno, "malformed row: expected 7 fields")
        idx, src_line, mnemonic, a, b, r, ext = fields
        if int(idx) != len(unit.oplines):
            raise DumpError(lineno, "malformed row: opline index out of sequence")
        opcode = OPCODES.get(mnemonic)
        if opcode is None:
            raise DumpError(lineno, f"unknown mnemonic {mnemonic}")
        try:
            ops = [parse_operand(x) for x in (a, b, r)]
            line_no = int(src_line)
            ext_v = int(ext)
            unit.oplines.append(Opline(opcode, ops[0], ops[1], ops[2], ext_v, line_no))
        except (ValueError, IRError) as exc:
            raise DumpError(lineno, f"malformed row: {exc}") from None
        return
    if head == "file":
        unit.file = line[5:]
    elif head == "owner" and len(fields) == 2:
        unit.owner_class = fields[1]
    elif head == "static_method" and len(fields) == 1:
        unit.is_static = True
    elif head == "param" and len(fields) in (4, 5):
        is_ref = _flag(fields[2], "ref", lineno)
        variadic = _flag(fields[3], "variadic", lineno)
        default, has_default = None, False
        if len(fields) == 5:
            if not fields[4].startswith("default="):
                raise DumpError(lineno, "expected default=")
            default, has_default = _lit(fields[4][8:], lineno), True
        unit.params.append(ParamMeta(fields[1], is_ref, variadic, default, has_default))
    elif head == "static" and len(fields) == 3:
        unit.statics[fields[1]] = _lit(fields[2], lineno)
    else:
        raise DumpError(lineno, f"malformed row: {head}")


def _class_row(cm, fields, line, lineno):
    head = fields[0]
    if head == "file":
        cm.file = line[5:]
    elif head == "trait" and len(fields) == 2:
        cm.traits.append(fields[1])
    elif head == "prop" and len(fields) == 4:
        is_static = _flag(fields[2], "static", lineno)
        if not fields[3].startswith("default="):
            raise DumpError(lineno, "expected default=")
        cm.properties[fields[1]] = PropMeta(_lit(fields[3][8:], lineno), is_static)
    elif head == "is_trait" and len(fields) == 1:
        cm.is_trait = True
    else:
        raise DumpError(lineno, f"malformed class row: {head}")


def _lit(text, lineno):
    try:
        return parse_literal(text)
    except ValueError as exc:
        raise DumpError(lineno, str(exc)) from None
