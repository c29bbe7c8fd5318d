"""Lowering from AST to three-address oplines.

Conventions (also documented in docs/dump-format.md):

* Call arguments are evaluated first; the INIT_* / SEND_* / DO_FCALL group is
  then emitted contiguously, so a call group never spans a basic block.
* ``&&`` and ``||`` always lower to JMPZ/JMPNZ chains that materialize a
  boolean TEMP; BOOL_AND/BOOL_OR are never emitted by the frontend.
* ``$$x`` copies x's value into a TEMP (QM_ASSIGN) and fetches through it.
* Assignments into arrays and objects use ASSIGN_DIM / ASSIGN_OBJ followed by
  an OP_DATA opline carrying the value; deeper paths go through FETCH_*_W,
  which produce VAR handles.
"""

from __future__ import annotations

import os

from .. import ir
from ..ir import (C, CV, J, T, UNUSED, V, ArrayLit, ClassMeta, OpcodeKind as Op, Opline,
                  OpUnit, ParamMeta, PropMeta, UnitKind)
from ..phpconst import PREDEFINED_CONSTANTS, SUPERGLOBALS
from ..phpsem import PhpRuntimeError, normalize_key
from . import ast as A


class LowerError(Exception):
    def __init__(self, line: int, construct: str):
        super().__init__(f"line {line}: unsupported construct: {construct}")
        self.line = line
        self.construct = construct


MAGIC_METHODS = {"__construct", "__get", "__set", "__call"}

_BINOPS = {
    ".": Op.CONCAT, "+": Op.ADD, "-": Op.SUB, "*": Op.MUL, "/": Op.DIV, "%": Op.MOD,
    "**": Op.POW, "|": Op.BW_OR, "&": Op.BW_AND, "^": Op.BW_XOR, "<<": Op.SL, ">>": Op.SR,
    "==": Op.IS_EQUAL, "!=": Op.IS_NOT_EQUAL, "===": Op.IS_IDENTICAL,
    "!==": Op.IS_NOT_IDENTICAL, "<": Op.IS_SMALLER, "<=": Op.IS_SMALLER_OR_EQUAL,
    "<=>": Op.SPACESHIP, "xor": Op.BOOL_XOR,
}
_SWAPPED = {">": Op.IS_SMALLER, ">=": Op.IS_SMALLER_OR_EQUAL}
_CASTS = {"int": ir.CAST_INT, "float": ir.CAST_FLOAT, "string": ir.CAST_STRING,
          "bool": ir.CAST_BOOL, "array": ir.CAST_ARRAY, "object": ir.CAST_OBJECT}
_INCLUDE_EXT = {"include": ir.INC_INCLUDE, "include_once": ir.INC_INCLUDE_ONCE,
                "require": ir.INC_REQUIRE, "require_once": ir.INC_REQUIRE_ONCE}


class _Loop:
    def __init__(self, is_switch=False):
        self.is_switch = is_switch
        self.breaks: list = []
        self.continues: list = []


class _ClassCtx:
    def __init__(self, name, parent):
        self.name = name
        self.parent = parent


class FileLowerer:
    """Collects the units produced by one source file."""

    def __init__(self, path: str):
        self.path = path
        self.functions: list = []
        self.classes: list = []
        self.const_prologue: list = []   # (name, expr, line) for class constants

    def lower_file(self, tree: A.File):
        main = UnitLowerer(self, self.path, UnitKind.FILE_MAIN)
        body = []
        for stmt in tree.body:
            self.hoist(stmt, body)
        for name, expr, line in self.const_prologue:
            main.emit(Op.DECLARE_CONST, C(name), main.rv(expr), T(main.new_t()), line=line)
        main.stmts(body)
        end_line = main.last_line
        main.emit(Op.RETURN, C(1), line=end_line)
        return main.finish(), self.functions, self.classes

    def hoist(self, stmt, body):
        """Pull declarations out of the statement stream (PHP hoists them)."""
        if isinstance(stmt, A.FunctionDecl):
            self.functions.append(self.lower_function(stmt))
        elif isinstance(stmt, A.ClassDecl):
            if not stmt.is_interface:
                self.classes.append(self.lower_class(stmt))
        else:
            body.append(stmt)
            for child in _nested_bodies(stmt):
                kept = []
                for s in child:
                    self.hoist(s, kept)
                child[:] = kept

    def lower_function(self, decl: A.FunctionDecl) -> OpUnit:
        u = UnitLowerer(self, decl.name, UnitKind.FUNCTION, func_name=decl.name)
        return u.lower_callable(decl.params, decl.body, decl.line)

    def lower_class(self, decl: A.ClassDecl) -> ClassMeta:
        cm = ClassMeta(decl.name, decl.parent, {}, {}, list(decl.traits), decl.is_trait, self.path)
        cctx = _ClassCtx(decl.name, decl.parent)
        for p in decl.props:
            default = const_eval(p.default, cctx, self.path) if p.default is not None else None
            cm.properties[p.name] = PropMeta(default, p.is_static)
        for name, expr in decl.consts:
            self.const_prologue.append((f"{decl.name}::{name}", _resolve_self(expr, cctx), decl.line))
        for m in decl.methods:
            lname = m.name.lower()
            if lname.startswith("__") and lname not in MAGIC_METHODS:
                raise LowerError(m.line, f"magic method {m.name}")
            if m.body is None:
                continue
            u = UnitLowerer(self, f"{decl.name}::{m.name}", UnitKind.METHOD, cls=cctx,
                            func_name=m.name)
            unit = u.lower_callable(m.params, m.body, m.line)
            unit.owner_class = decl.name
            unit.is_static = m.is_static
            cm.methods[lname] = unit
        return cm


def _resolve_self(expr, cctx):
    if isinstance(expr, A.ClassConst) and expr.cls.lower() == "self":
        return A.ClassConst(expr.line, cctx.name, expr.name)
    return expr


def _nested_bodies(stmt):
    if isinstance(stmt, A.Block):
        return [stmt.body]
    if isinstance(stmt, A.If):
        out = [stmt.then] + [b for _, b in stmt.elifs]
        if stmt.else_ is not None:
            out.append(stmt.else_)
        return out
    if isinstance(stmt, (A.While, A.DoWhile, A.For, A.Foreach)):
        return [stmt.body]
    if isinstance(stmt, A.Switch):
        return [c.body for c in stmt.cases]
    return []


def const_eval(e, cctx=None, path=""):
    """Fold a constant expression (defaults of params, props and statics)."""
    if isinstance(e, A.Literal):
        return e.value
    if isinstance(e, A.Unary) and e.op in "-+":
        v = const_eval(e.operand, cctx, path)
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            return -v if e.op == "-" else v
    if isinstance(e, A.ArrayLiteral):
        items, nxt = [], 0
        for it in e.items:
            if it.unpack or it.by_ref:
                break
            if it.key is None:
                k = nxt
            else:
                try:
                    k = normalize_key(const_eval(it.key, cctx, path))
                except PhpRuntimeError:
                    raise LowerError(it.line, "illegal array key") from None
            items = [(a, b) for a, b in items if a != k]
            items.append((k, const_eval(it.value, cctx, path)))
            if isinstance(k, int) and k >= nxt:
                nxt = k + 1
        else:
            return ArrayLit(tuple(items))
    if isinstance(e, A.ConstRef):
        name = e.name
        if name == "__FILE__":
            return path
        if name == "__DIR__":
            return os.path.dirname(path)
        if name == "__LINE__":
            return e.line
        if name == "__CLASS__":
            return cctx.name if cctx else ""
        if name in PREDEFINED_CONSTANTS:
            return PREDEFINED_CONSTANTS[name]
    if isinstance(e, A.Binary) and e.op == ".":
        a, b = const_eval(e.left, cctx, path), const_eval(e.right, cctx, path)
        if isinstance(a, str) and isinstance(b, str):
            return a + b
    raise LowerError(e.line, "non-constant default value")


class UnitLowerer:
    def __init__(self, filectx: FileLowerer, name, kind, cls=None, func_name=""):
        self.f = filectx
        self.name = name
        self.kind = kind
        self.cls = cls
        self.func_name = func_name
        self.ops: list = []
        self.ntemp = 0
        self.nvar = 0
        self.loops: list = []
        self.params: list = []
        self.statics: dict = {}
        self.last_line = 1

    # ------------------------------------------------------------ emission
    def emit(self, opcode, op1=UNUSED, op2=UNUSED, result=UNUSED, ext=0, line=1):
        self.ops.append(Opline(opcode, op1, op2, result, ext, max(1, line)))
        self.last_line = max(self.last_line, line)
        return len(self.ops) - 1

    def new_t(self):
        self.ntemp += 1
        return self.ntemp - 1

    def new_v(self):
        self.nvar += 1
        return self.nvar - 1

    def here(self):
        return len(self.ops)

    def patch(self, index, target):
        op = self.ops[index]
        slot = op.opcode.jump_slot
        kw = {slot: J(target)}
        self.ops[index] = Opline(op.opcode, kw.get("op1", op.op1), kw.get("op2", op.op2),
                                 op.result, op.extended_value, op.source_line)

    def jump(self, opcode, cond=None, line=1):
        if opcode is Op.JMP:
            return self.emit(Op.JMP, J(0), line=line)
        return self.emit(opcode, cond, J(0), line=line)

    def finish(self) -> OpUnit:
        unit = OpUnit(self.name, self.kind, self.ops, self.params, self.statics,
                      self.cls.name if self.cls and self.kind is UnitKind.METHOD else None,
                      self.f.path)
        diags = ir.validate_unit(unit)
        if diags:
            raise LowerError(self.last_line, f"internal lowering error {diags[0]}")
        return unit

    # ------------------------------------------------------------ units
    def lower_callable(self, params, body, line) -> OpUnit:
        for i, p in enumerate(params):
            default = None
            has_default = p.default is not None
            if has_default:
                default = const_eval(p.default, self.cls, self.f.path)
            self.params.append(ParamMeta(p.name, p.by_ref, p.variadic, default, has_default))
            if p.variadic:
                self.emit(Op.RECV_VARIADIC, C(i), result=CV(p.name), line=p.line)
            elif has_default:
                self.emit(Op.RECV_INIT, C(i), C(default), CV(p.name), line=p.line)
            else:
                self.emit(Op.RECV, C(i), result=CV(p.name), line=p.line)
        self.last_line = line
        self.stmts(body)
        self.emit(Op.RETURN, C(None), line=self.last_line)
        return self.finish()

    # ------------------------------------------------------------ statements
    def stmts(self, body):
        for s in body:
            self.stmt(s)

    def stmt(self, s):
        method = getattr(self, "s_" + type(s).__name__, None)
        if method is None:
            raise LowerError(s.line, type(s).__name__)
        method(s)

    def s_Nop(self, s):
        pass

    def s_Block(self, s):
        self.stmts(s.body)

    def s_UnsupportedStmt(self, s):
        raise LowerError(s.line, s.construct)

    def s_FunctionDecl(self, s):
        self.f.functions.append(self.f.lower_function(s))

    def s_ClassDecl(self, s):
        if not s.is_interface:
            self.f.classes.append(self.f.lower_class(s))

    def s_Echo(self, s):
        for v in s.values:
            self.emit(Op.ECHO, self.rv(v), line=s.line)

    def s_InlineHtml(self, s):
        self.emit(Op.ECHO, C(s.text), line=s.line)

    def s_ExprStmt(self, s):
        self.rv(s.expr, want=False)

    def s_If(self, s):
        ends = []
        arms = [(s.cond, s.then)] + list(s.elifs)
        for idx, (cond, body) in enumerate(arms):
            c = self.rv(cond)
            jz = self.jump(Op.JMPZ, c, cond.line)
            self.stmts(body)
            last = idx == len(arms) - 1
            if not last or s.else_ is not None:
                ends.append(self.jump(Op.JMP, line=cond.line))
            self.patch(jz, self.here())
        if s.else_ is not None:
            self.stmts(s.else_)
        for j in ends:
            self.patch(j, self.here())

    def _close_loop(self, loop, cont_target, break_target):
        for j in loop.continues:
            self.patch(j, cont_target)
        for j in loop.breaks:
            self.patch(j, break_target)

    def s_While(self, s):
        top = self.here()
        c = self.rv(s.cond)
        jz = self.jump(Op.JMPZ, c, s.line)
        loop = _Loop()
        self.loops.append(loop)
        self.stmts(s.body)
        self.loops.pop()
        self.jump_to(top, s.line)
        end = self.here()
        self.patch(jz, end)
        self._close_loop(loop, top, end)

    def jump_to(self, target, line):
        self.emit(Op.JMP, J(target), line=line)

    def s_DoWhile(self, s):
        top = self.here()
        loop = _Loop()
        self.loops.append(loop)
        self.stmts(s.body)
        self.loops.pop()
        cond_at = self.here()
        c = self.rv(s.cond)
        self.emit(Op.JMPNZ, c, J(top), line=s.cond.line)
        self._close_loop(loop, cond_at, self.here())

    def s_For(self, s):
        for e in s.init:
            self.rv(e, want=False)
        top = self.here()
        jz = None
        if s.cond:
            for e in s.cond[:-1]:
                self.rv(e, want=False)
            c = self.rv(s.cond[-1])
            jz = self.jump(Op.JMPZ, c, s.line)
        loop = _Loop()
        self.loops.append(loop)
        self.stmts(s.body)
        self.loops.pop()
        step = self.here()
        for e in s.step:
            self.rv(e, want=False)
        self.jump_to(top, s.line)
        end = self.here()
        if jz is not None:
            self.patch(jz, end)
        self._close_loop(loop, step, end)

    def s_Foreach(self, s):
        if s.by_ref:
            raise LowerError(s.line, "foreach by reference")
        subj = self.rv(s.subject)
        it = V(self.new_v())
        self.emit(Op.FE_RESET, subj, result=it, line=s.line)
        top = self.here()
        simple = isinstance(s.value, A.Var) and s.value.name not in SUPERGLOBALS
        dest = CV(s.value.name) if simple else T(self.new_t())
        fetch = self.emit(Op.FE_FETCH, it, J(0), dest, line=s.line)
        if s.key is not None:
            if isinstance(s.key, A.Var) and s.key.name not in SUPERGLOBALS:
                self.emit(Op.FE_KEY, it, result=CV(s.key.name), line=s.line)
            else:
                kt = T(self.new_t())
                self.emit(Op.FE_KEY, it, result=kt, line=s.line)
                self.assign_operand(s.key, kt, s.line, want=False)
        if not simple:
            self.assign_operand(s.value, dest, s.line, want=False)
        loop = _Loop()
        self.loops.append(loop)
        self.stmts(s.body)
        self.loops.pop()
        self.jump_to(top, s.line)
        end = self.here()
        self.patch(fetch, end)
        self._close_loop(loop, top, end)

    def s_Switch(self, s):
        subj = self.rv(s.subject)
        case_jumps = []
        for case in s.cases:
            if case.expr is None:
                case_jumps.append(None)
                continue
            v = self.rv(case.expr)
            t = T(self.new_t())
            self.emit(Op.CASE, subj, v, t, line=case.line)
            case_jumps.append(self.jump(Op.JMPNZ, t, case.line))
        default_jump = self.jump(Op.JMP, line=s.line)
        loop = _Loop(is_switch=True)
        self.loops.append(loop)
        default_at = None
        for case, j in zip(s.cases, case_jumps):
            if j is None:
                default_at = self.here()
            else:
                self.patch(j, self.here())
            self.stmts(case.body)
        self.loops.pop()
        end = self.here()
        self.patch(default_jump, default_at if default_at is not None else end)
        self._close_loop(loop, end, end)

    def _loop_at(self, levels, line, what):
        if levels < 1 or levels > len(self.loops):
            raise LowerError(line, f"'{what} {levels}' outside of loop")
        return self.loops[-levels]

    def s_Break(self, s):
        loop = self._loop_at(s.levels, s.line, "break")
        loop.breaks.append(self.jump(Op.JMP, line=s.line))

    def s_Continue(self, s):
        loop = self._loop_at(s.levels, s.line, "continue")
        j = self.jump(Op.JMP, line=s.line)
        (loop.breaks if loop.is_switch else loop.continues).append(j)

    def s_Return(self, s):
        v = self.rv(s.value) if s.value is not None else C(None)
        self.emit(Op.RETURN, v, line=s.line)

    def s_Global(self, s):
        for name in s.names:
            self.emit(Op.BIND_GLOBAL, CV(name), C(name), line=s.line)

    def s_StaticVar(self, s):
        for name, default in s.vars:
            self.statics[name] = const_eval(default, self.cls, self.f.path) if default is not None else None
            self.emit(Op.BIND_STATIC, CV(name), line=s.line)

    def s_Unset(self, s):
        for t in s.targets:
            if isinstance(t, A.Var) and t.name not in SUPERGLOBALS:
                self.emit(Op.UNSET, CV(t.name), ext=ir.UNSET_VAR, line=s.line)
            elif isinstance(t, A.Index):
                c = self.lv_container(t.base)
                k = self.rv(t.key)
                self.emit(Op.UNSET, c, k, ext=ir.UNSET_DIM, line=s.line)
            elif isinstance(t, A.Prop):
                o = self.rv(t.obj)
                self.emit(Op.UNSET, o, self.member(t.name), ext=ir.UNSET_OBJ, line=s.line)
            else:
                raise LowerError(s.line, "unset of this expression")

    def s_ConstDecl(self, s):
        for name, expr in s.items:
            v = self.rv(expr)
            self.emit(Op.DECLARE_CONST, C(name), v, line=s.line)

    # ------------------------------------------------------------ expressions
    def rv(self, e, want=True):
        """Lower an expression; return the operand holding its value."""
        method = getattr(self, "e_" + type(e).__name__, None)
        if method is None:
            raise LowerError(e.line, type(e).__name__)
        return method(e, want)

    def result(self, want):
        return T(self.new_t()) if want else UNUSED

    def tempify(self, op, line):
        if op.kind is ir.OperandKind.TEMP:
            return op
        t = T(self.new_t())
        self.emit(Op.QM_ASSIGN, op, result=t, line=line)
        return t

    def e_Literal(self, e, want):
        return C(e.value)

    def e_Unsupported(self, e, want):
        raise LowerError(e.line, e.construct)

    def e_Interp(self, e, want):
        acc = None
        for p in e.parts:
            if isinstance(p, str):
                if p == "":
                    continue
                op = C(p)
            else:
                op = self.rv(p)
            if acc is None:
                acc = op
            else:
                t = T(self.new_t())
                self.emit(Op.CONCAT, acc, op, t, line=e.line)
                acc = t
        if acc is None:
            return C("")
        if acc.kind is not ir.OperandKind.TEMP or len(e.parts) == 1:
            t = T(self.new_t())
            self.emit(Op.CAST, acc, result=t, ext=ir.CAST_STRING, line=e.line)
            acc = t
        return acc

    def e_Var(self, e, want):
        if e.name in SUPERGLOBALS:
            t = T(self.new_t())
            self.emit(Op.FETCH_R, C(e.name), result=t, ext=ir.FETCH_GLOBAL, line=e.line)
            return t
        return CV(e.name)

    def e_VarVar(self, e, want):
        name = self.tempify(self.rv(e.name_expr), e.line)
        t = T(self.new_t())
        self.emit(Op.FETCH_R, name, result=t, ext=ir.FETCH_LOCAL, line=e.line)
        return t

    def e_ArrayLiteral(self, e, want):
        t = T(self.new_t())
        if not e.items:
            self.emit(Op.INIT_ARRAY, result=t, line=e.line)
            return t
        first = True
        for it in e.items:
            if it.unpack or it.by_ref:
                raise LowerError(it.line, "array spread or reference element")
            k = self.rv(it.key) if it.key is not None else UNUSED
            v = self.rv(it.value)
            self.emit(Op.INIT_ARRAY if first else Op.ADD_ARRAY_ELEMENT, v, k, t, line=it.line)
            first = False
        return t

    def e_Index(self, e, want):
        b = self.rv(e.base)
        k = self.rv(e.key)
        t = T(self.new_t())
        self.emit(Op.FETCH_DIM_R, b, k, t, line=e.line)
        return t

    def e_ArrayAppend(self, e, want):
        raise LowerError(e.line, "cannot use [] for reading")

    def member(self, name):
        return C(name) if isinstance(name, str) else self.rv(name)

    def e_Prop(self, e, want):
        o = self.rv(e.obj)
        n = self.member(e.name)
        t = T(self.new_t())
        self.emit(Op.FETCH_OBJ_R, o, n, t, line=e.line)
        return t

    def static_prop_name(self, cls, name, line):
        return C(f"{self.class_name(cls, line)}::${name}")

    def e_StaticProp(self, e, want):
        t = T(self.new_t())
        self.emit(Op.FETCH_R, self.static_prop_name(e.cls, e.name, e.line), result=t,
                  ext=ir.FETCH_GLOBAL, line=e.line)
        return t

    def class_name(self, cls, line):
        low = cls.lower()
        if low == "self":
            if self.cls is None:
                raise LowerError(line, "self outside class")
            return self.cls.name
        if low == "parent":
            if self.cls is None or self.cls.parent is None:
                raise LowerError(line, "parent without parent class")
            return self.cls.parent
        return cls

    def e_ConstRef(self, e, want):
        name = e.name
        if name == "__LINE__":
            return C(e.line)
        if name == "__FILE__":
            return C(self.f.path)
        if name == "__DIR__":
            return C(os.path.dirname(self.f.path))
        if name == "__FUNCTION__":
            return C(self.func_name)
        if name == "__CLASS__":
            return C(self.cls.name if self.cls else "")
        if name == "__METHOD__":
            return C(f"{self.cls.name}::{self.func_name}" if self.cls else self.func_name)
        t = T(self.new_t())
        self.emit(Op.FETCH_CONSTANT, op2=C(name), result=t, line=e.line)
        return t

    def e_ClassConst(self, e, want):
        t = T(self.new_t())
        cls = e.cls if e.cls.lower() == "static" else self.class_name(e.cls, e.line)
        self.emit(Op.FETCH_CONSTANT, op2=C(f"{cls}::{e.name}"), result=t, line=e.line)
        return t

    # calls
    def lower_args(self, args):
        out = []
        for a in args:
            if isinstance(a.value, A.Unsupported):
                raise LowerError(a.line, a.value.construct)
            out.append((self.rv(a.value), a.unpack, a.line))
        return out

    def sends(self, lowered, line, by_ref=()):
        for i, (op, unpack, aline) in enumerate(lowered):
            if unpack:
                opcode = Op.SEND_UNPACK
            elif i in by_ref and op.kind is ir.OperandKind.CV:
                opcode = Op.SEND_REF
            elif op.kind in (ir.OperandKind.CV, ir.OperandKind.VAR):
                opcode = Op.SEND_VAR
            else:
                opcode = Op.SEND_VAL
            self.emit(opcode, op, C(i), line=aline)

    def e_Call(self, e, want):
        lname = e.name.lower().lstrip("\\")
        if lname == "define" and len(e.args) >= 2:
            n = self.rv(e.args[0].value)
            v = self.rv(e.args[1].value)
            r = self.result(want)
            self.emit(Op.DECLARE_CONST, n, v, r, line=e.line)
            return r
        lowered = self.lower_args(e.args)
        self.emit(Op.INIT_FCALL, op2=C(e.name.lstrip("\\")), ext=len(lowered), line=e.line)
        self.sends(lowered, e.line, _BYREF_BUILTINS.get(lname, ()))
        r = self.result(want)
        self.emit(Op.DO_FCALL, result=r, line=e.line)
        return r

    def e_DynCall(self, e, want):
        callee = self.rv(e.callee)
        lowered = self.lower_args(e.args)
        self.emit(Op.INIT_DYNAMIC_CALL, callee, ext=len(lowered), line=e.line)
        self.sends(lowered, e.line)
        r = self.result(want)
        self.emit(Op.DO_FCALL, result=r, line=e.line)
        return r

    def e_MethodCall(self, e, want):
        o = self.rv(e.obj)
        n = self.member(e.name)
        lowered = self.lower_args(e.args)
        self.emit(Op.INIT_METHOD_CALL, o, n, ext=len(lowered), line=e.line)
        self.sends(lowered, e.line)
        r = self.result(want)
        self.emit(Op.DO_FCALL, result=r, line=e.line)
        return r

    def e_StaticCall(self, e, want):
        if isinstance(e.cls, str):
            cls = C(e.cls if e.cls.lower() == "static" else self.class_name(e.cls, e.line))
        else:
            cls = self.rv(e.cls)
        n = self.member(e.name)
        lowered = self.lower_args(e.args)
        self.emit(Op.INIT_STATIC_METHOD_CALL, cls, n, ext=len(lowered), line=e.line)
        self.sends(lowered, e.line)
        r = self.result(want)
        self.emit(Op.DO_FCALL, result=r, line=e.line)
        return r

    def e_New(self, e, want):
        if isinstance(e.cls, str):
            cls = C(e.cls if e.cls.lower() == "static" else self.class_name(e.cls, e.line))
        else:
            cls = self.rv(e.cls)
        lowered = self.lower_args(e.args)
        obj = V(self.new_v())
        self.emit(Op.NEW, cls, result=obj, ext=len(lowered), line=e.line)
        self.sends(lowered, e.line)
        self.emit(Op.DO_FCALL, line=e.line)
        return obj

    # assignment
    def lv_container(self, e):
        """Operand (CV or VAR handle) naming a writable location."""
        line = e.line
        if isinstance(e, A.Var):
            if e.name in SUPERGLOBALS:
                h = V(self.new_v())
                self.emit(Op.FETCH_W, C(e.name), result=h, ext=ir.FETCH_GLOBAL, line=line)
                return h
            return CV(e.name)
        if isinstance(e, A.VarVar):
            name = self.tempify(self.rv(e.name_expr), line)
            h = V(self.new_v())
            self.emit(Op.FETCH_W, name, result=h, ext=ir.FETCH_LOCAL, line=line)
            return h
        if isinstance(e, A.StaticProp):
            h = V(self.new_v())
            self.emit(Op.FETCH_W, self.static_prop_name(e.cls, e.name, line), result=h,
                      ext=ir.FETCH_GLOBAL, line=line)
            return h
        if isinstance(e, (A.Index, A.ArrayAppend)):
            c = self.lv_container(e.base)
            k = self.rv(e.key) if isinstance(e, A.Index) else UNUSED
            h = V(self.new_v())
            self.emit(Op.FETCH_DIM_W, c, k, h, line=line)
            return h
        if isinstance(e, A.Prop):
            o = self.rv(e.obj)
            n = self.member(e.name)
            h = V(self.new_v())
            self.emit(Op.FETCH_OBJ_W, o, n, h, line=line)
            return h
        raise LowerError(line, "cannot assign to this expression")

    def assign_operand(self, target, value, line, want=True):
        r = self.result(want)
        if isinstance(target, A.Var) and target.name not in SUPERGLOBALS:
            if target.name == "this":
                raise LowerError(line, "cannot re-assign $this")
            self.emit(Op.ASSIGN, CV(target.name), value, r, line=line)
        elif isinstance(target, (A.Index, A.ArrayAppend)):
            c = self.lv_container(target.base)
            k = self.rv(target.key) if isinstance(target, A.Index) else UNUSED
            self.emit(Op.ASSIGN_DIM, c, k, r, line=line)
            self.emit(Op.OP_DATA, value, line=line)
        elif isinstance(target, A.Prop):
            o = self.rv(target.obj)
            n = self.member(target.name)
            self.emit(Op.ASSIGN_OBJ, o, n, r, line=line)
            self.emit(Op.OP_DATA, value, line=line)
        elif isinstance(target, (A.Var, A.VarVar, A.StaticProp)):
            h = self.lv_container(target)
            self.emit(Op.ASSIGN, h, value, r, line=line)
        else:
            raise LowerError(line, "cannot assign to this expression")
        return r if want else None

    def e_Assign(self, e, want):
        if isinstance(e.value, A.Unsupported):
            raise LowerError(e.line, e.value.construct)
        v = self.rv(e.value)
        return self.assign_operand(e.target, v, e.line, want)

    def e_CompoundAssign(self, e, want):
        if e.op == ".":
            v = self.rv(e.value)
            if isinstance(e.target, A.Var) and e.target.name not in SUPERGLOBALS:
                h = CV(e.target.name)
            else:
                h = self.lv_container(e.target)
            r = self.result(want)
            self.emit(Op.ASSIGN_CONCAT, h, v, r, line=e.line)
            return r
        cur = self.rv(e.target)
        v = self.rv(e.value)
        t = T(self.new_t())
        self.emit(_BINOPS[e.op], cur, v, t, line=e.line)
        return self.assign_operand(e.target, t, e.line, want)

    def e_IncDec(self, e, want):
        if isinstance(e.target, A.Var) and e.target.name not in SUPERGLOBALS:
            h = CV(e.target.name)
        else:
            h = self.lv_container(e.target)
        if e.op == "++":
            opcode = Op.PRE_INC if e.prefix else Op.POST_INC
        else:
            opcode = Op.PRE_DEC if e.prefix else Op.POST_DEC
        r = self.result(want)
        self.emit(opcode, h, result=r, line=e.line)
        return r

    # operators
    def e_Binary(self, e, want):
        op = e.op
        if op in ("&&", "and"):
            return self.short_circuit(e, Op.JMPZ, False)
        if op in ("||", "or"):
            return self.short_circuit(e, Op.JMPNZ, True)
        if op == "instanceof":
            a = self.rv(e.left)
            b = self.rv(e.right)
            t = T(self.new_t())
            self.emit(Op.INSTANCEOF, a, b, t, line=e.line)
            return t
        a = self.rv(e.left)
        b = self.rv(e.right)
        t = T(self.new_t())
        if op in _SWAPPED:
            self.emit(_SWAPPED[op], b, a, t, line=e.line)
        else:
            self.emit(_BINOPS[op], a, b, t, line=e.line)
        return t

    def short_circuit(self, e, jump_op, short_value):
        t = T(self.new_t())
        a = self.rv(e.left)
        j = self.jump(jump_op, a, e.line)
        b = self.rv(e.right)
        self.emit(Op.BOOL, b, result=t, line=e.line)
        end = self.jump(Op.JMP, line=e.line)
        self.patch(j, self.here())
        self.emit(Op.QM_ASSIGN, C(short_value), result=t, line=e.line)
        self.patch(end, self.here())
        return t

    def e_Unary(self, e, want):
        if e.op == "@":
            return self.rv(e.operand, want)
        a = self.rv(e.operand)
        t = T(self.new_t())
        if e.op == "!":
            self.emit(Op.BOOL_NOT, a, result=t, line=e.line)
        elif e.op == "~":
            self.emit(Op.BW_NOT, a, result=t, line=e.line)
        else:
            self.emit(Op.MUL, a, C(-1 if e.op == "-" else 1), t, line=e.line)
        return t

    def e_Cast(self, e, want):
        a = self.rv(e.operand)
        t = T(self.new_t())
        self.emit(Op.CAST, a, result=t, ext=_CASTS[e.type], line=e.line)
        return t

    def e_Ternary(self, e, want):
        t = T(self.new_t())
        c = self.rv(e.cond)
        jz = self.jump(Op.JMPZ, c, e.line)
        then = c if e.then is None else self.rv(e.then)
        self.emit(Op.QM_ASSIGN, then, result=t, line=e.line)
        end = self.jump(Op.JMP, line=e.line)
        self.patch(jz, self.here())
        self.emit(Op.QM_ASSIGN, self.rv(e.else_), result=t, line=e.line)
        self.patch(end, self.here())
        return t

    def e_Coalesce(self, e, want):
        t = T(self.new_t())
        c = self.isset_one(e.left, False, e.line)
        jz = self.jump(Op.JMPZ, c, e.line)
        self.emit(Op.QM_ASSIGN, self.rv(e.left), result=t, line=e.line)
        end = self.jump(Op.JMP, line=e.line)
        self.patch(jz, self.here())
        self.emit(Op.QM_ASSIGN, self.rv(e.right), result=t, line=e.line)
        self.patch(end, self.here())
        return t

    def isset_one(self, target, empty, line):
        flag = ir.ISSET_EMPTY if empty else 0
        t = T(self.new_t())
        if isinstance(target, A.Var) and target.name not in SUPERGLOBALS:
            self.emit(Op.ISSET_ISEMPTY, CV(target.name), result=t, ext=flag, line=line)
        elif isinstance(target, A.Index):
            b = self.rv(target.base)
            k = self.rv(target.key)
            self.emit(Op.ISSET_ISEMPTY, b, k, t, ext=flag | ir.ISSET_DIM, line=line)
        elif isinstance(target, A.Prop):
            o = self.rv(target.obj)
            self.emit(Op.ISSET_ISEMPTY, o, self.member(target.name), t,
                      ext=flag | ir.ISSET_OBJ, line=line)
        else:
            v = self.rv(target)
            self.emit(Op.ISSET_ISEMPTY, v, result=t, ext=flag, line=line)
        return t

    def e_Isset(self, e, want):
        if len(e.targets) == 1:
            return self.isset_one(e.targets[0], False, e.line)
        chain = A.Isset(e.line, e.targets[:1])
        for tgt in e.targets[1:]:
            chain = A.Binary(e.line, "&&", chain, A.Isset(e.line, [tgt]))
        return self.rv(chain)

    def e_Empty(self, e, want):
        return self.isset_one(e.target, True, e.line)

    def e_Exit(self, e, want):
        v = self.rv(e.value) if e.value is not None else UNUSED
        self.emit(Op.EXIT, v, line=e.line)
        return C(None)

    def e_Print(self, e, want):
        self.emit(Op.ECHO, self.rv(e.value), line=e.line)
        return C(1)

    def e_Include(self, e, want):
        p = self.rv(e.path)
        r = self.result(want)
        self.emit(Op.INCLUDE_OR_EVAL, p, result=r, ext=_INCLUDE_EXT[e.kind], line=e.line)
        return r

    def e_Eval(self, e, want):
        p = self.rv(e.code)
        r = self.result(want)
        self.emit(Op.INCLUDE_OR_EVAL, p, result=r, ext=ir.INC_EVAL, line=e.line)
        return r


# Built-ins whose listed argument positions are passed by reference.
_BYREF_BUILTINS = {
    "array_push": (0,), "array_pop": (0,), "array_shift": (0,), "array_unshift": (0,),
    "sort": (0,), "rsort": (0,), "ksort": (0,), "krsort": (0,), "asort": (0,),
    "arsort": (0,), "usort": (0,), "shuffle": (0,), "array_splice": (0,),
    "preg_match": (2,), "preg_match_all": (2,), "parse_str": (1,), "settype": (0,),
}
