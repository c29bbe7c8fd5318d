"""Path- and context-sensitive taint analysis over opcode CFGs.

One ``Analyzer`` per entry file.  Each unit activation sweeps its CFG in
block order, joining states where forward edges meet.  Loops run
concretely while their exit conditions stay concrete and switch to a
join/widen fixpoint otherwise.  Calls and includes are analyzed inline
with a fresh frame (calls) or the includer's frame (includes), memoized on
the callee, its entry state and the last two call sites.
"""

from __future__ import annotations

import itertools
import logging
import posixpath
from dataclasses import dataclass, field, replace
from typing import Optional

from . import builtins as B
from . import ir, phpsem
from .builtins import BuiltinModel, CallCtx, NotConcrete, TaintRule
from .cfg import build_cfg
from .config import AnalysisConfig
from .ir import ArrayLit, OpcodeKind as Op, OperandKind, OpUnit, ProgramDb, UnitKind
from .phpconst import PREDEFINED_CONSTANTS, TAINT_SOURCES
from .phpsem import PhpRuntimeError
from .rules import RuleSet, default_rules
from .state import (ANY, APPEND, EMPTY, NULL, VALUE_SET_CAP, Arr, Env, Frame, Iter, Obj,
                    ObjCell, Ref, Scalar, ScalarType, Source, State, TaintLabel, Unknown, World,
                    arr_read, arr_unset, arr_write, combine_taint, deep_taint, join, join_states,
                    lit, literal_choices, own_taint, scalar_of, widen_states)

log = logging.getLogger("opflow")

JOIN_WIDEN_AFTER = 3
MAX_JOIN_ROUNDS = 64
RECURSION_REPEAT = 3
MEMO_CHAIN = 2


class AnalysisError(Exception):
    pass


@dataclass(frozen=True)
class Finding:
    vuln_class: str
    file: str
    line: int
    callee: str
    arg: int
    sources: tuple          # sorted TaintLabels
    trace: tuple            # ((file, line, description), ...)

    def sort_key(self):
        return (self.file, self.line, self.vuln_class, self.callee, self.arg)


@dataclass
class EntryResult:
    entry: str
    findings: list
    oplines: int = 0
    seconds: float = 0.0
    error: Optional[str] = None
    notes: list = field(default_factory=list)


@dataclass
class Activation:
    unit: OpUnit
    args: list
    called_class: Optional[str]
    chain: tuple            # call/include sites, outermost first
    stack: tuple            # (file, unit name) of enclosing calls
    returns: list = field(default_factory=list)
    splits: int = 0


class _Dead:
    """A call or include after which no path continues."""


DEAD = _Dead()


@dataclass
class _Loop:
    end: int
    mode: str = "concrete"
    iters: int = 0
    rounds: int = 0
    head_in: Optional[State] = None
    restarting: bool = False
    exit_split: bool = False

    def reset(self):
        self.mode, self.iters, self.rounds = "concrete", 0, 0
        self.head_in, self.restarting, self.exit_split = None, False, False


@dataclass
class _Call:
    kind: str               # func, dyn, method, static, new
    target: object
    name: object = None
    line: int = 0
    args: list = field(default_factory=list)     # (value, operand)


class _CfgInfo:
    def __init__(self, unit):
        self.cfg = build_cfg(unit)
        self.ends = {}
        starts = [b.start for b in self.cfg.blocks]
        self.starts = starts
        for b in self.cfg.blocks:
            for s, _ in b.successors:
                if starts[s] <= b.start:
                    self.ends[s] = max(self.ends.get(s, b.id), b.id)


def _fresh_scalar(stype, taints=EMPTY, stack=()):
    return Scalar(stype, None, taints, stack)


BOOL_ANY = scalar_of([True, False])


def _with_taint(v, taints, stack):
    """Replace the taint of a value (recursively for arrays)."""
    if isinstance(v, Scalar):
        return Scalar(v.stype, v.values, taints, stack if taints else ())
    if isinstance(v, Arr):
        elems = tuple((k, _with_taint(x, taints, stack)) for k, x in v.elems)
        dflt = _with_taint(v.default, taints, stack) if v.default is not None else None
        return Arr(elems, v.next_index, dflt)
    if isinstance(v, (Unknown, Source)):
        return Unknown(taints, stack if taints else ())
    return v


def _value_of_literals(outs):
    out = None
    for x in outs:
        v = lit(x)
        out = v if out is None else join(out, v)
    if out is None:
        return NULL
    if all(not isinstance(x, ArrayLit) for x in outs):
        return scalar_of(outs)
    return out


def bool_outcomes(v) -> set:
    if isinstance(v, Scalar):
        if v.values is None:
            return {True, False} if v.stype is not ScalarType.NULL else {False}
        return {phpsem.to_bool(x) for x in v.values}
    if isinstance(v, Arr):
        if v.elems:
            return {True}
        if v.default is None and v.next_index is not None:
            return {False}
        return {True, False}
    if isinstance(v, Obj):
        return {True}
    return {True, False}


def isset_outcomes(v) -> set:
    if isinstance(v, Scalar):
        if v.values is None:
            return {False} if v.stype is ScalarType.NULL else {True, False}
        return {x is not None for x in v.values}
    if isinstance(v, (Arr, Obj)):
        return {True}
    return {True, False}


class Analyzer:
    def __init__(self, db: ProgramDb, rules: Optional[RuleSet] = None,
                 config: Optional[AnalysisConfig] = None, registry: Optional[dict] = None,
                 loader=None):
        self.db = db
        self.rules = rules if rules is not None else default_rules()
        self.config = config if config is not None else AnalysisConfig()
        self.registry = registry if registry is not None else B.register_minimum_set()
        self.loader = loader
        self._cfgs = {}
        self._eval_cache = {}

    # ================================================================ entry
    def analyze_entry(self, path: str) -> EntryResult:
        import time
        t0 = time.perf_counter()
        self._findings = {}
        self._steps = 0
        self._memo = {}
        self._notes = []
        self._dyn_functions = {}
        self._dyn_classes = {}
        result = EntryResult(path, [])
        unit = self.db.files.get(path)
        if unit is None:
            result.error = f"{path}: not a loaded file"
            return result
        cwd = posixpath.normpath(self.config.cwd) if self.config.cwd else posixpath.dirname(path)
        env = Env(cwd, tuple(self.config.include_path), frozenset({path}), (path,))
        world = World({}, {}, {}, {}, env)
        state = State(Frame(world.globals, {}, {}, True), world)
        act = Activation(unit, [], None, (), ())
        try:
            self.run_unit(unit, state, act)
        except AnalysisError as e:
            result.error = str(e)
        except RecursionError:
            result.error = "analysis recursion limit reached"
        result.findings = self._finalize()
        result.oplines = self._steps
        result.notes = sorted(set(self._notes))
        result.seconds = time.perf_counter() - t0
        return result

    def _finalize(self):
        out = []
        for key, (labels, chain) in self._findings.items():
            cls, file, line, callee, arg = key
            sources = tuple(sorted(labels))
            trace = tuple((lb.file, lb.line, f"source {lb.describe()}") for lb in sources)
            trace += chain + ((file, line, f"sink {callee}"),)
            out.append(Finding(cls, file, line, callee, arg, sources, trace))
        out.sort(key=Finding.sort_key)
        return out

    def note(self, msg):
        self._notes.append(msg)
        log.debug(msg)

    # ================================================================ sinks
    def reportable(self, v, vclass, heap):
        taints, stack = deep_taint(v, heap)
        if not taints:
            return EMPTY
        for entry in stack:
            if self.rules.sanitizes(entry, vclass):
                return EMPTY
        return taints

    def emit(self, vclass, act, line, callee, arg, labels):
        key = (vclass, act.unit.file, line, callee, arg)
        cur = self._findings.get(key)
        if cur is None:
            self._findings[key] = (set(labels), act.chain)
        else:
            cur[0].update(labels)

    def check_sink(self, st, act, line, vclass, callee, arg, v):
        labels = self.reportable(v, vclass, st.world.heap)
        if labels:
            self.emit(vclass, act, line, callee, arg, labels)

    def check_call_sinks(self, st, act, line, rows, callee, args):
        for pos, vclass in rows:
            positions = range(len(args)) if pos == "*" else [pos]
            for p in positions:
                if p < len(args):
                    self.check_sink(st, act, line, vclass, callee, p, args[p])

    # ================================================================ units
    def cfg_info(self, unit) -> _CfgInfo:
        info = self._cfgs.get(id(unit))
        if info is None:
            info = self._cfgs[id(unit)] = (unit, _CfgInfo(unit))
        return info[1]

    def run_unit(self, unit, state, act):
        """Run one activation; returns (return value, exit state) or None."""
        info = self.cfg_info(unit)
        blocks = info.cfg.blocks
        n = len(blocks)
        if not unit.oplines:
            return NULL, state
        starts = info.starts
        loops = {h: _Loop(e) for h, e in info.ends.items()}
        pending = [None] * n
        backpending = {}
        pending[0] = state
        fallthrough_end = []
        i = 0
        while i < n:
            st = pending[i]
            pending[i] = None
            if st is not None:
                rec = loops.get(i)
                if rec is not None:
                    if rec.restarting:
                        rec.restarting = False
                    else:
                        rec.reset()
                    rec.head_in = st.copy()
                succs, split = self.exec_block(info, i, st, act)
                for s, st2 in succs:
                    if s is None:
                        fallthrough_end.append(st2)
                    elif starts[s] <= starts[i]:
                        prev = backpending.get(s)
                        backpending[s] = st2 if prev is None else join_states(prev, st2)
                    else:
                        prev = pending[s]
                        pending[s] = st2 if prev is None else join_states(prev, st2)
                if split:
                    for h, rec in loops.items():
                        if h <= i <= rec.end and any(s is None or not h <= s <= rec.end
                                                     for s, _ in succs):
                            rec.exit_split = True
            ready = [h for h, rec in loops.items() if h <= i and rec.end <= i and h in backpending]
            if ready:
                h = max(ready)
                if self._restart(h, loops, backpending, pending, act):
                    i = h
                    continue
            i += 1
        for st in fallthrough_end:
            act.returns.append((NULL, st))
        if not act.returns:
            return None
        ret, out = act.returns[0]
        for v, s in act.returns[1:]:
            ret = join(ret, v)
            out = join_states(out, s)
        return ret, out

    def _restart(self, h, loops, backpending, pending, act) -> bool:
        back = backpending.pop(h)
        rec = loops[h]
        rec.iters += 1
        if rec.mode == "concrete" and (rec.exit_split or rec.iters > self.config.max_loop_iterations
                                       or act.splits > self.config.branch_split_budget):
            rec.mode = "join"
        if rec.mode == "concrete":
            new = back
        else:
            new = join_states(rec.head_in, back)
            rec.rounds += 1
            if rec.rounds > JOIN_WIDEN_AFTER:
                new = widen_states(rec.head_in, new)
            if new == rec.head_in:
                return False
            if rec.rounds > MAX_JOIN_ROUNDS:
                self.note(f"{act.unit.file}: loop at block {h} did not stabilize; giving up")
                return False
        rec.restarting = True
        rec.exit_split = False
        for h2, inner in loops.items():
            if h < h2 <= rec.end:
                inner.reset()
                backpending.pop(h2, None)
        pending[h] = new
        return True

    # ================================================================ operands
    def val(self, st, op):
        k = op.kind
        if k is OperandKind.CONST:
            return lit(op.value)
        if k is OperandKind.CV:
            return self.read_cv(st, op.value)
        if k is OperandKind.TEMP:
            return st.frame.temps.get(("T", op.value), NULL)
        if k is OperandKind.VAR:
            return st.frame.temps.get(("V", op.value), NULL)
        return NULL

    def read_cv(self, st, name):
        al = st.frame.aliases.get(name)
        if al is not None:
            if al[0] == "g":
                return st.world.globals.get(al[1], NULL)
            return st.world.statics.get(al[1], NULL)
        return st.frame.locals.get(name, NULL)

    def write_cv(self, st, name, v):
        al = st.frame.aliases.get(name)
        if al is not None:
            if al[0] == "g":
                st.world.globals[al[1]] = v
            else:
                st.world.statics[al[1]] = v
            return
        st.frame.locals[name] = v

    def set_result(self, st, op, v):
        k = op.kind
        if k is OperandKind.UNUSED:
            return
        if k is OperandKind.CV:
            self.write_cv(st, op.value, v)
        elif k is OperandKind.TEMP:
            st.frame.temps[("T", op.value)] = v
        elif k is OperandKind.VAR:
            st.frame.temps[("V", op.value)] = v

    # ================================================================ references
    def as_ref(self, st, op) -> Ref:
        if op.kind is OperandKind.CV:
            return Ref(("cv", op.value))
        v = self.val(st, op)
        return v if isinstance(v, Ref) else Ref(("void",))

    def root_read(self, st, root, act):
        kind = root[0]
        if kind == "cv":
            return self.read_cv(st, root[1])
        if kind == "g":
            return st.world.globals.get(root[1], NULL)
        if kind == "sg":
            return self.superglobal(st, root[1], act, 0)
        if kind == "o":
            return self.prop_read(st, Obj(root[1]), root[2], act, magic=False)
        if kind == "cvset":
            out = None
            for name in root[1]:
                v = self.read_cv(st, name)
                out = v if out is None else join(out, v)
            return out if out is not None else NULL
        if kind == "cvany":
            return self.any_local(st)
        return NULL

    def any_local(self, st):
        t = combine_taint(deep_taint(v, st.world.heap) for v in st.frame.locals.values())
        return Unknown(*t)

    def ref_read(self, st, ref, act):
        v = self.root_read(st, ref.root, act)
        for key in ref.path:
            v = self.dim_value(v, key)
        return v

    def dim_value(self, v, key):
        if key is APPEND:
            return NULL
        if isinstance(v, Arr):
            return arr_read(v, key)
        if isinstance(v, (Unknown, Source)):
            return Unknown(*own_taint(v))
        if isinstance(v, Scalar) and v.taints:
            return _fresh_scalar(ScalarType.STR, v.taints, v.stack)
        return NULL

    def put_path(self, container, path, v, weak):
        if not path:
            return join(container, v) if weak else v
        key, rest = path[0], path[1:]
        if isinstance(container, Arr):
            a = container
        elif isinstance(container, Scalar) and (container.values is None and container.stype is ScalarType.NULL
                                                or container.values is not None
                                                and all(x is None or x == "" or x is False
                                                        for x in container.values)):
            a = Arr()
        elif isinstance(container, Source):
            return container
        elif isinstance(container, Obj):
            return container
        else:
            t = combine_taint([own_taint(container), deep_taint(v, {})])
            return Unknown(*t)
        if key is APPEND:
            return arr_write(a, APPEND, self.put_path(NULL, rest, v, False))
        if key is ANY:
            sub = arr_read(a, ANY) if rest else NULL
            return arr_write(a, ANY, self.put_path(sub, rest, v, True))
        sub = a.get(key)
        if sub is None:
            sub = NULL
        return arr_write(a, key, self.put_path(sub, rest, v, weak))

    def ref_write(self, st, ref, v, act, weak=False):
        root, path = ref.root, ref.path
        kind = root[0]
        if kind == "cv":
            cur = self.read_cv(st, root[1]) if path or weak else NULL
            self.write_cv(st, root[1], self.put_path(cur, path, v, weak))
        elif kind == "g":
            cur = st.world.globals.get(root[1], NULL)
            st.world.globals[root[1]] = self.put_path(cur, path, v, weak)
        elif kind == "sg":
            name = root[1]
            if name in TAINT_SOURCES:
                return
            if name == "GLOBALS":
                if not path:
                    return
                gkey, rest = path[0], path[1:]
                if isinstance(gkey, str):
                    cur = st.world.globals.get(gkey, NULL)
                    st.world.globals[gkey] = self.put_path(cur, rest, v, weak)
                else:
                    for g in list(st.world.globals):
                        cur = st.world.globals[g]
                        st.world.globals[g] = self.put_path(cur, rest, v, True)
                return
            cur = self.superglobal(st, name, act, 0)
            st.world.globals[name] = self.put_path(cur, path, v, weak)
        elif kind == "o":
            oids, prop = root[1], root[2]
            weak = weak or len(oids) > 1
            for oid in sorted(oids, key=repr):
                cell = st.world.heap.get(oid)
                if cell is None:
                    continue
                cur = cell.get(prop)
                if cur is None:
                    cur = self.prop_default(cell.cls, prop)
                st.world.heap[oid] = cell.set(prop, self.put_path(cur, path, v, weak))
        elif kind == "cvset":
            for name in root[1]:
                cur = self.read_cv(st, name)
                self.write_cv(st, name, self.put_path(cur, path, v, True))
        elif kind == "cvany":
            for name in sorted(st.frame.locals):
                cur = st.frame.locals[name]
                st.frame.locals[name] = self.put_path(cur, path, v, True)

    def ref_unset(self, st, ref, key, act):
        if ref.root[0] in ("void",) or (ref.root[0] == "sg" and ref.root[1] in TAINT_SOURCES):
            return
        cur = self.ref_read(st, ref, act)
        if isinstance(cur, Arr):
            self.ref_write(st, ref, arr_unset(cur, key), act)

    # ================================================================ superglobals, props, classes
    def superglobal(self, st, name, act, line):
        kind = TAINT_SOURCES.get(name)
        if kind is not None:
            return Source(kind, act.unit.file, line)
        if name == "GLOBALS":
            items = tuple(sorted((k, v) for k, v in st.world.globals.items() if "::" not in k))
            return Arr(items, 0, None)
        v = st.world.globals.get(name)
        if v is None:
            return Arr((), None, Scalar(ScalarType.UNKNOWN))
        return v

    def find_class(self, name):
        if not isinstance(name, str):
            return None
        low = name.lower().lstrip("\\")
        cm = self._dyn_classes.get(low)
        return cm if cm is not None else self.db.classes.get(low)

    def class_chain(self, name):
        out, seen = [], set()
        cm = self.find_class(name)
        while cm is not None and cm.name.lower() not in seen:
            seen.add(cm.name.lower())
            out.append(cm)
            cm = self.find_class(cm.parent) if cm.parent else None
        return out

    def find_method(self, cls, mname):
        low = mname.lower()
        for cm in self.class_chain(cls):
            m = cm.methods.get(low)
            if m is not None:
                return m
            for tname in cm.traits:
                tm = self.find_class(tname)
                if tm is not None and low in tm.methods:
                    return tm.methods[low]
        return None

    def is_subclass(self, cls, parent):
        return any(cm.name.lower() == parent.lower() for cm in self.class_chain(cls))

    def prop_default(self, cls, prop):
        for cm in self.class_chain(cls):
            pm = cm.properties.get(prop)
            if pm is not None and not pm.is_static:
                return lit(pm.default)
            for tname in cm.traits:
                tm = self.find_class(tname)
                if tm is not None and prop in tm.properties:
                    return lit(tm.properties[prop].default)
        return None

    def declares_prop(self, cls, prop):
        return self.prop_default(cls, prop) is not None

    def static_prop_key(self, name):
        cls, _, prop = name.partition("::$")
        for cm in self.class_chain(cls):
            pm = cm.properties.get(prop)
            if pm is not None and pm.is_static:
                return f"{cm.name}::${prop}", lit(pm.default)
        return name, NULL

    def prop_read(self, st, obj, prop, act, magic=True, line=0):
        if isinstance(obj, Obj):
            out = None
            for oid in sorted(obj.oids, key=repr):
                cell = st.world.heap.get(oid)
                if cell is None:
                    continue
                if prop is ANY:
                    v = NULL
                    for _, x in cell.props:
                        v = join(v, x)
                else:
                    v = cell.get(prop)
                    if v is None:
                        v = self.prop_default(cell.cls, prop)
                    if v is None and magic:
                        getter = self.find_method(cell.cls, "__get")
                        if getter is not None:
                            v = self.call_user(st, act, getter, [lit(prop)], [], Obj(frozenset({oid})),
                                               cell.cls, line, f"{cell.cls}::__get()")
                            if v is DEAD:
                                v = None
                    if v is None:
                        v = NULL
                out = v if out is None else join(out, v)
            return out if out is not None else NULL
        if isinstance(obj, (Unknown, Source)):
            return Unknown(*own_taint(obj))
        return NULL

    # ================================================================ blocks
    def exec_block(self, info, bid, st, act):
        block = info.cfg.blocks[bid]
        ops = act.unit.oplines
        calls = []
        i = block.start
        end = block.end_exclusive
        self._steps += end - i
        if self._steps > self.config.max_steps:
            raise AnalysisError(f"step budget of {self.config.max_steps} oplines exhausted")
        nxt = bid + 1 if bid + 1 < len(info.cfg.blocks) else None
        block_of = info.cfg.block_of
        while i < end:
            op = ops[i]
            k = op.opcode
            if k is Op.JMP:
                return [(block_of[op.op1.value], st)], False
            if k is Op.JMPZ or k is Op.JMPNZ:
                outs = bool_outcomes(self.val(st, op.op1))
                jump_on = k is Op.JMPNZ
                targets = []
                if (not jump_on) in outs:
                    targets.append(nxt)
                if jump_on in outs:
                    targets.append(block_of[op.op2.value])
                return self._fork(st, targets, act)
            if k is Op.FE_FETCH:
                return self.fe_fetch(st, op, act, nxt, block_of[op.op2.value])
            if k is Op.RETURN:
                act.returns.append((self.val(st, op.op1), st))
                return [], False
            if k is Op.EXIT:
                if op.op1.used:
                    v = self.val(st, op.op1)
                    if not (isinstance(v, Scalar) and v.stype is ScalarType.INT):
                        self.check_sink(st, act, op.source_line, "XSS", "exit", 0, v)
                return [], False
            if k is Op.ASSIGN_DIM or k is Op.ASSIGN_OBJ:
                data = ops[i + 1] if i + 1 < end and ops[i + 1].opcode is Op.OP_DATA else None
                v = self.val(st, data.op1) if data is not None else NULL
                if k is Op.ASSIGN_DIM:
                    self.assign_dim(st, op, v, act)
                elif self.assign_obj(st, op, v, act) is DEAD:
                    return [], False
                self.set_result(st, op.result, v)
                i += 2 if data is not None else 1
                continue
            if self.exec_op(st, op, act, calls, i) is DEAD:
                return [], False
            i += 1
        return [(nxt, st)], False

    def _fork(self, st, targets, act):
        if len(targets) == 1:
            return [(targets[0], st)], False
        act.splits += 1
        return [(targets[0], st.copy()), (targets[1], st)], True

    def fe_fetch(self, st, op, act, body, exit_):
        it = self.val(st, op.op1)
        kslot = ("K", op.op1.value)
        if not isinstance(it, Iter):
            return [(exit_, st)], False
        subj = it.subject
        if isinstance(subj, Arr) and subj.default is None and subj.next_index is not None \
                and it.pos is not None:
            if it.pos >= len(subj.elems):
                return [(exit_, st)], False
            key, v = subj.elems[it.pos]
            self.set_result(st, op.op1, Iter(subj, it.pos + 1))
            st.frame.temps[kslot] = lit(key)
            self.set_result(st, op.result, v)
            return [(body, st)], False
        if isinstance(subj, Arr):
            if not subj.elems and subj.default is None and subj.next_index is not None:
                return [(exit_, st)], False
            v = None
            for _, x in subj.elems:
                v = x if v is None else join(v, x)
            if subj.default is not None:
                v = subj.default if v is None else join(v, subj.default)
            keys = [k for k, _ in subj.elems]
            key = scalar_of(keys) if subj.default is None else Scalar()
        elif isinstance(subj, Obj):
            v = self.prop_read(st, subj, ANY, act, magic=False)
            key = Scalar(ScalarType.STR)
        elif isinstance(subj, Source):
            label = TaintLabel(subj.kind, subj.file, subj.line, "*")
            v = Unknown(frozenset({label}))
            key = _fresh_scalar(ScalarType.UNKNOWN, frozenset({label}))
        elif isinstance(subj, Unknown):
            v = Unknown(subj.taints, subj.stack)
            key = _fresh_scalar(ScalarType.UNKNOWN, subj.taints, subj.stack)
        else:
            return [(exit_, st)], False
        other = st.copy()
        self.set_result(st, op.op1, Iter(subj, None))
        st.frame.temps[kslot] = key
        self.set_result(st, op.result, v)
        act.splits += 1
        return [(body, st), (exit_, other)], True

    # ================================================================ opcodes
    def exec_op(self, st, op, act, calls, index):
        k = op.opcode
        h = _HANDLERS.get(k)
        if h is not None:
            return h(self, st, op, act, calls, index)
        if k in _BINARY:
            a, b = self.val(st, op.op1), self.val(st, op.op2)
            self.set_result(st, op.result, self.binary(k, a, b))
            return None
        if k in (Op.NOP, Op.OP_DATA):
            return None
        self.note(f"{act.unit.file}:{op.source_line}: opcode {k.name} over-approximated")
        t = combine_taint([own_taint(self.val(st, op.op1)), own_taint(self.val(st, op.op2))])
        self.set_result(st, op.result, Unknown(*t))
        return None

    def binary(self, k, a, b):
        fn = _BINARY[k]
        if k is Op.CONCAT:
            t = combine_taint([deep_taint(a, {}), deep_taint(b, {})])
            stype = ScalarType.STR
        else:
            t = (EMPTY, ())
            stype = _BINARY_TYPE.get(k, ScalarType.UNKNOWN)
        ca, cb = literal_choices(a), literal_choices(b)
        if ca is not None and cb is not None and len(ca) * len(cb) <= VALUE_SET_CAP * 4:
            outs = []
            try:
                for x in ca:
                    for y in cb:
                        outs.append(fn(x, y))
            except (PhpRuntimeError, OverflowError, ValueError, TypeError, MemoryError):
                return _fresh_scalar(stype, *t)
            v = _value_of_literals(outs)
            return _with_taint(v, *t) if t[0] else v
        return _fresh_scalar(stype, *t)

    def unary(self, fn, v, stype, keep_taint=False):
        t = deep_taint(v, {}) if keep_taint else (EMPTY, ())
        c = literal_choices(v)
        if c is not None:
            try:
                outs = [fn(x) for x in c]
            except (PhpRuntimeError, OverflowError, ValueError, TypeError):
                return _fresh_scalar(stype, *t)
            out = _value_of_literals(outs)
            return _with_taint(out, *t) if t[0] else out
        return _fresh_scalar(stype, *t)

    def dim_read(self, st, base, key, act, line):
        if isinstance(base, Source):
            if isinstance(key, Scalar) and key.is_single and not isinstance(key.concrete, ArrayLit):
                path = phpsem.to_str(key.concrete)
            else:
                path = "*"
            return Unknown(frozenset({TaintLabel(base.kind, act.unit.file, line, path)}))
        if isinstance(base, Arr):
            choices = literal_choices(key) if isinstance(key, Scalar) else None
            if choices is None:
                return arr_read(base, ANY)
            out = None
            for c in choices:
                try:
                    nk = phpsem.normalize_key(c)
                except PhpRuntimeError:
                    continue
                v = arr_read(base, nk)
                out = v if out is None else join(out, v)
            return out if out is not None else NULL
        if isinstance(base, Scalar):
            if base.values is not None and isinstance(key, Scalar) and key.values is not None:
                outs = []
                for s in base.values:
                    for kv in key.values:
                        if isinstance(s, str) and isinstance(kv, int) and not isinstance(kv, bool):
                            idx = kv + len(s) if kv < 0 else kv
                            outs.append(s[idx] if 0 <= idx < len(s) else "")
                        elif isinstance(s, str):
                            return _fresh_scalar(ScalarType.STR, base.taints, base.stack)
                        else:
                            outs.append(None)
                return scalar_of(outs, base.taints, base.stack)
            if base.stype is ScalarType.NULL:
                return NULL
            return _fresh_scalar(ScalarType.UNKNOWN, base.taints, base.stack)
        if isinstance(base, Unknown):
            return Unknown(base.taints, base.stack)
        return NULL

    def key_of(self, v):
        """Array key for a write: a normalized literal, or ANY."""
        if isinstance(v, Scalar) and v.is_single:
            try:
                return phpsem.normalize_key(v.concrete)
            except PhpRuntimeError:
                return ANY
        return ANY

    def assign_dim(self, st, op, v, act):
        ref = self.as_ref(st, op.op1)
        key = APPEND if not op.op2.used else self.key_of(self.val(st, op.op2))
        self.ref_write(st, Ref(ref.root, ref.path + (key,)), v, act)

    def assign_obj(self, st, op, v, act):
        obj = self.val(st, op.op1)
        name = self.val(st, op.op2)
        if not isinstance(obj, Obj):
            return None
        prop = phpsem.to_str(name.concrete) if isinstance(name, Scalar) and name.is_single else ANY
        for oid in sorted(obj.oids, key=repr):
            cell = st.world.heap.get(oid)
            if cell is None:
                continue
            if prop is not ANY and cell.get(prop) is None and not self.declares_prop(cell.cls, prop):
                setter = self.find_method(cell.cls, "__set")
                if setter is not None:
                    r = self.call_user(st, act, setter, [lit(prop), v], [], Obj(frozenset({oid})),
                                       cell.cls, op.source_line, f"{cell.cls}::__set()")
                    if r is DEAD:
                        return DEAD
                    continue
            cell = st.world.heap.get(oid)
            if prop is ANY:
                props = tuple((pk, join(pv, v)) for pk, pv in cell.props)
                st.world.heap[oid] = ObjCell(cell.cls, props)
            elif len(obj.oids) > 1:
                cur = cell.get(prop) or self.prop_default(cell.cls, prop) or NULL
                st.world.heap[oid] = cell.set(prop, join(cur, v))
            else:
                st.world.heap[oid] = cell.set(prop, v)
        return None

    # ---------------------------------------------------------------- calls
    def call_user(self, st, act, unit, args, arg_ops, this, called_class, line, desc):
        ukey = (unit.file, unit.name)
        if act.stack.count(ukey) >= RECURSION_REPEAT - 1 or len(act.stack) >= self.config.max_call_depth:
            self.note(f"{act.unit.file}:{line}: recursion cut at {unit.name}")
            t = combine_taint(deep_taint(a, st.world.heap) for a in args)
            return Unknown(*t)
        chain = act.chain + ((act.unit.file, line, desc),)
        memo_key = None
        try:
            memo_key = (id(unit), tuple(args), this, called_class, chain[-MEMO_CHAIN:],
                        st.world.key())
            hit = self._memo.get(memo_key)
        except TypeError:
            hit = None
        if hit is not None:
            if hit is DEAD:
                return DEAD
            ret, world, refs = hit
            st.world = world.copy()
            if st.frame.is_global:
                st.frame.locals = st.world.globals
            self._write_refs(st, unit, arg_ops, refs)
            return ret
        frame = Frame({}, {}, {}, False)
        if this is not None:
            frame.locals["this"] = this
        new_act = Activation(unit, list(args), called_class, chain, act.stack + (ukey,))
        res = self.run_unit(unit, State(frame, st.world), new_act)
        if res is None:
            if memo_key is not None:
                self._memo[memo_key] = DEAD
            return DEAD
        ret, out = res
        refs = {p.name: out.frame.locals.get(p.name, NULL) for p in unit.params if p.is_ref}
        if memo_key is not None:
            self._memo[memo_key] = (ret, out.world.copy(), refs)
        st.world = out.world
        if st.frame.is_global:
            st.frame.locals = st.world.globals
        self._write_refs(st, unit, arg_ops, refs)
        return ret

    def _write_refs(self, st, unit, arg_ops, refs):
        for i, p in enumerate(unit.params):
            if p.is_ref and i < len(arg_ops) and arg_ops[i] is not None \
                    and arg_ops[i].kind is OperandKind.CV:
                self.write_cv(st, arg_ops[i].value, refs.get(p.name, NULL))

    def lookup_function(self, name, env):
        low = name.lower().lstrip("\\")
        for f in env.executed:
            fn = self.db.file_functions.get(f, {}).get(low)
            if fn is not None:
                return fn
        fn = self._dyn_functions.get(low)
        return fn if fn is not None else self.db.functions.get(low)

    def do_call(self, st, act, call: _Call):
        args = [a for a, _ in call.args]
        ops = [o for _, o in call.args]
        line = call.line
        if call.kind == "func":
            return self.call_named(st, act, call.target, args, ops, line)
        if call.kind == "dyn":
            return self.call_dynamic(st, act, call.target, args, ops, line)
        if call.kind == "method":
            return self.call_method(st, act, call.target, call.name, args, ops, line)
        if call.kind == "static":
            return self.call_static(st, act, call.target, call.name, args, ops, line)
        if call.kind == "new":
            for oid, cls in call.target:
                ctor = self.find_method(cls, "__construct")
                if ctor is None:
                    if self.find_class(cls) is None:
                        self.check_call_sinks(st, act, line, self.rules.sinks_for(cls), cls, args)
                    continue
                r = self.call_user(st, act, ctor, args, ops, Obj(frozenset({oid})), cls, line,
                                   f"new {cls}")
                if r is DEAD:
                    return DEAD
            return NULL
        return Unknown()

    def _join_results(self, results):
        live = [r for r in results if r is not DEAD]
        if not live:
            return DEAD
        out = live[0]
        for r in live[1:]:
            out = join(out, r)
        return out

    def call_named(self, st, act, name, args, ops, line):
        low = name.lower().lstrip("\\")
        intrinsic = _INTRINSICS.get(low)
        if intrinsic is not None:
            return intrinsic(self, st, act, args, ops, line)
        fn = self.lookup_function(low, st.world.env)
        if fn is not None:
            self.check_call_sinks(st, act, line, self.rules.sinks_for(low), low, args)
            return self.call_user(st, act, fn, args, ops, None, None, line, f"call {fn.name}()")
        return self.call_builtin(st, act, low, args, ops, line)

    def _states_fork(self, st, items, fn):
        """Run ``fn(state, item)`` per item on copies of st; join into st."""
        if len(items) == 1:
            return fn(st, items[0])
        outs = []
        for it in items:
            sub = st.copy()
            r = fn(sub, it)
            if r is not DEAD:
                outs.append((r, sub))
        if not outs:
            return DEAD
        ret, acc = outs[0]
        for r, s in outs[1:]:
            ret = join(ret, r)
            acc = join_states(acc, s)
        st.frame, st.world = acc.frame, acc.world
        return ret

    def call_dynamic(self, st, act, callee, args, ops, line):
        labels = self.reportable(callee, "RCE", st.world.heap)
        if labels:
            self.emit("RCE", act, line, "(dynamic call)", -1, labels)
        if isinstance(callee, Arr) and callee.default is None and len(callee.elems) == 2:
            recv, meth = callee.elems[0][1], callee.elems[1][1]
            if isinstance(recv, Obj):
                return self.call_method(st, act, recv, meth, args, ops, line)
            return self.call_static(st, act, recv, meth, args, ops, line)
        choices = literal_choices(callee) if isinstance(callee, Scalar) else None
        names = sorted({c for c in choices or () if isinstance(c, str) and c})
        if not names:
            self.note(f"{act.unit.file}:{line}: unresolved dynamic call")
            t = combine_taint(deep_taint(a, st.world.heap) for a in args)
            return Unknown(*t)

        def one(sub, name):
            if "::" in name:
                cls, _, m = name.partition("::")
                return self.call_static(sub, act, lit(cls), lit(m), args, ops, line)
            return self.call_named(sub, act, name, args, ops, line)
        return self._states_fork(st, names, one)

    def call_method(self, st, act, recv, mname, args, ops, line):
        names = literal_choices(mname) if isinstance(mname, Scalar) else None
        names = sorted({phpsem.to_str(n) for n in names or ()})
        if not isinstance(recv, Obj) or not names:
            for n in names:
                self.check_call_sinks(st, act, line, self.rules.method_sinks(n), "->" + n, args)
            t = combine_taint([deep_taint(recv, st.world.heap)]
                              + [deep_taint(a, st.world.heap) for a in args])
            return Unknown(*t)
        targets = []
        for oid in sorted(recv.oids, key=repr):
            cell = st.world.heap.get(oid)
            if cell is None:
                continue
            for n in names:
                targets.append((oid, cell.cls, n))

        def one(sub, target):
            oid, cls, n = target
            this = Obj(frozenset({oid}))
            m = self.find_method(cls, n)
            if m is not None:
                return self.call_user(sub, act, m, args, ops, this if not m.is_static else None,
                                      cls, line, f"call {m.name}()")
            magic = self.find_method(cls, "__call")
            if magic is not None:
                packed = Arr(tuple(enumerate(args)), len(args), None)
                return self.call_user(sub, act, magic, [lit(n), packed], [], this, cls, line,
                                      f"call {cls}::__call({n})")
            self.check_call_sinks(sub, act, line, self.rules.method_sinks(n), "->" + n, args)
            t = combine_taint(deep_taint(a, sub.world.heap) for a in args)
            return Unknown(*t)
        if not targets:
            return Unknown()
        return self._states_fork(st, targets, one)

    def call_static(self, st, act, clsv, mname, args, ops, line):
        classes = literal_choices(clsv) if isinstance(clsv, Scalar) else None
        names = literal_choices(mname) if isinstance(mname, Scalar) else None
        if not classes or not names:
            t = combine_taint(deep_taint(a, st.world.heap) for a in args)
            return Unknown(*t)
        targets = []
        for c in classes:
            c = phpsem.to_str(c)
            if c.lower() == "static":
                c = act.called_class or c
            for n in names:
                targets.append((c, phpsem.to_str(n)))
        targets = sorted(set(targets))
        this = st.frame.locals.get("this")

        def one(sub, target):
            cls, n = target
            m = self.find_method(cls, n)
            if m is None:
                self.note(f"{act.unit.file}:{line}: unresolved static call {cls}::{n}")
                t = combine_taint(deep_taint(a, sub.world.heap) for a in args)
                return Unknown(*t)
            if not m.is_static and isinstance(this, Obj):
                called = act.called_class if act.called_class and self.is_subclass(act.called_class, cls) else cls
                return self.call_user(sub, act, m, args, ops, this, called, line, f"call {m.name}()")
            return self.call_user(sub, act, m, args, ops, None, cls, line, f"call {m.name}()")
        return self._states_fork(st, targets, one)

    # ---------------------------------------------------------------- builtins
    def model_for(self, name) -> Optional[BuiltinModel]:
        model = self.registry.get(name)
        ov = self.rules.builtin_overrides.get(name)
        if ov is not None:
            base = model if model is not None else BuiltinModel(name, TaintRule.PASS_ALL)
            model = replace(base, taint_rule=ov[0], arg=ov[1])
        return model

    def call_builtin(self, st, act, name, args, ops, line):
        heap = st.world.heap
        self.check_call_sinks(st, act, line, self.rules.sinks_for(name), name, args)
        model = self.model_for(name)
        if model is None:
            self.note(f"unmodeled built-in {name}() treated as taint pass-through")
            t = combine_taint(deep_taint(a, heap) for a in args)
            return Unknown(*t)
        result = None
        if model.concrete is not None and name not in self.rules.builtin_overrides:
            choices = B.arg_choices(args, VALUE_SET_CAP)
            if choices is not None:
                outs = []
                try:
                    for combo in choices:
                        outs.append(B.concrete_call(model, combo))
                except (NotConcrete, PhpRuntimeError, TypeError, ValueError, IndexError,
                        OverflowError, RecursionError, UnicodeError):
                    outs = None
                if outs is not None:
                    result = self.apply_rule(model, args, _value_of_literals(outs), heap)
        if result is None and model.abstract is not None:
            ctx = CallCtx(name, list(args), st.world.env, st.world.consts, heap)
            result = model.abstract(ctx)
            self._apply_effects(st, act, ctx, ops)
        if result is None:
            result = self.apply_rule(model, args, _typed_unknown(model.rtype), heap)
        return result

    def _apply_effects(self, st, act, ctx, ops):
        if ctx.new_env is not None:
            st.world.env = ctx.new_env
        for cname, v in ctx.defines:
            if cname not in st.world.consts:
                st.world.consts[cname] = v
        for idx, v in ctx.out.items():
            if idx < len(ops) and ops[idx] is not None and ops[idx].kind is OperandKind.CV:
                self.write_cv(st, ops[idx].value, v)
        for name, v in ctx.scope_writes.items():
            if name is ANY:
                self.ref_write(st, Ref(("cvany",)), v, act, weak=True)
            else:
                self.write_cv(st, name, v)
        for msg in ctx.notes:
            self.note(f"{act.unit.file}: {msg}")

    def apply_rule(self, model, args, value, heap):
        rule = model.taint_rule
        if rule is TaintRule.NONE:
            return _with_taint(value, EMPTY, ())
        if rule is TaintRule.PASS_ALL:
            t = combine_taint(deep_taint(a, heap) for a in args)
        elif rule is TaintRule.PASS_ARG:
            t = deep_taint(args[model.arg], heap) if model.arg < len(args) else (EMPTY, ())
        else:
            t = self.sanitize(model.name, args[model.arg] if model.arg < len(args) else NULL, heap)
        return _with_taint(value, *t)

    def sanitize(self, name, arg, heap):
        taints, stack = deep_taint(arg, heap)
        if not taints:
            return EMPTY, ()
        san = self.rules.sanitizers.get(name)
        if san is not None:
            if san.classes == frozenset(_ALL_CLASSES) and not san.reversible:
                return EMPTY, ()
            return taints, stack + (name,)
        enc = self.rules.decoders.get(name)
        if enc is not None:
            if stack and stack[-1] == enc:
                return taints, stack[:-1]
            return taints, stack
        return taints, stack

    # ---------------------------------------------------------------- includes
    def resolve_include(self, p, env, cur_file):
        if not p:
            return None
        if p.startswith("/"):
            cands = [p]
        elif p.startswith("./") or p.startswith("../"):
            cands = [posixpath.join(env.cwd, p)]
        else:
            cands = [posixpath.join(d if d.startswith("/") else posixpath.join(env.cwd, d), p)
                     for d in env.include_path]
            cands.append(posixpath.join(posixpath.dirname(cur_file), p))
            cands.append(posixpath.join(env.cwd, p))
        for c in cands:
            c = posixpath.normpath(c)
            if c in self.db.files:
                return c
            if self.loader is not None and self.loader(c):
                return c
        return None

    def do_include(self, st, act, op):
        line = op.source_line
        v = self.val(st, op.op1)
        ext = op.extended_value
        if ext == ir.INC_EVAL:
            return self.do_eval(st, act, v, line)
        kind = {ir.INC_INCLUDE: "include", ir.INC_INCLUDE_ONCE: "include_once",
                ir.INC_REQUIRE: "require", ir.INC_REQUIRE_ONCE: "require_once"}.get(ext, "include")
        labels = self.reportable(v, "FI", st.world.heap)
        if labels:
            self.emit("FI", act, line, kind, 0, labels)
        choices = literal_choices(v) if isinstance(v, Scalar) else None
        if choices is None:
            self.note(f"{act.unit.file}:{line}: unresolved dynamic {kind}")
            return Scalar(ScalarType.UNKNOWN)
        paths = sorted({phpsem.to_str(c) for c in choices if not isinstance(c, ArrayLit)})
        once = ext in (ir.INC_INCLUDE_ONCE, ir.INC_REQUIRE_ONCE)

        def one(sub, p):
            target = self.resolve_include(p, sub.world.env, act.unit.file)
            if target is None:
                self.note(f"{act.unit.file}:{line}: {kind} {p!r} not found")
                return lit(False)
            if once and target in sub.world.env.included_once:
                return lit(True)
            return self.run_included(sub, act, self.db.files[target], target, line, f"{kind} {p}")
        if not paths:
            return lit(False)
        return self._states_fork(st, paths, one)

    def run_included(self, st, act, unit, path, line, desc):
        env = st.world.env
        executed = env.executed if path in env.executed else env.executed + (path,)
        st.world.env = Env(env.cwd, env.include_path, env.included_once | {path}, executed)
        saved_temps = st.frame.temps
        frame = Frame(st.frame.locals, {}, st.frame.aliases, st.frame.is_global)
        new_act = Activation(unit, [], act.called_class, act.chain + ((act.unit.file, line, desc),),
                             act.stack)
        res = self.run_unit(unit, State(frame, st.world), new_act)
        if res is None:
            return DEAD
        ret, out = res
        st.world = out.world
        locals_ = out.world.globals if st.frame.is_global else out.frame.locals
        st.frame = Frame(locals_, saved_temps, out.frame.aliases, st.frame.is_global)
        return ret

    def do_eval(self, st, act, v, line):
        labels = self.reportable(v, "RCE", st.world.heap)
        if labels:
            self.emit("RCE", act, line, "eval", 0, labels)
        choices = literal_choices(v) if isinstance(v, Scalar) else None
        if choices is None:
            self.note(f"{act.unit.file}:{line}: eval of non-constant code not analyzed")
            return Unknown()
        codes = sorted({phpsem.to_str(c) for c in choices if not isinstance(c, ArrayLit)})

        def one(sub, code):
            unit = self.compile_eval(code, act.unit.file, line)
            if unit is None:
                return lit(False)
            return self.run_included(sub, act, unit, unit.file, line, "eval")
        if not codes:
            return lit(False)
        return self._states_fork(st, codes, one)

    def compile_eval(self, code, file, line):
        from .frontend import compile_source
        from .frontend.lexer import LexError
        from .frontend.lower import LowerError
        from .frontend.parser import ParseError
        key = (code, file, line)
        if key in self._eval_cache:
            main, funcs, classes = self._eval_cache[key]
        else:
            path = f"{file}({line}) : eval()'d code"
            try:
                main, funcs, classes = compile_source(("<?php " + code).encode("latin-1"), path)
            except (LexError, ParseError, LowerError, UnicodeError) as e:
                self.note(f"{file}:{line}: eval code not compiled: {e}")
                self._eval_cache[key] = (None, (), ())
                return None
            self._eval_cache[key] = (main, funcs, classes)
        if main is None:
            return None
        for fn in funcs:
            self._dyn_functions.setdefault(fn.name.lower(), fn)
        for cm in classes:
            self._dyn_classes.setdefault(cm.name.lower(), cm)
        return main


_ALL_CLASSES = ("XSS", "SQLI", "RCE", "FI", "AFD", "UFU", "PT", "SDE")


def _typed_unknown(rtype):
    if rtype == "int":
        return Scalar(ScalarType.INT)
    if rtype == "float":
        return Scalar(ScalarType.FLOAT)
    if rtype == "bool":
        return Scalar(ScalarType.BOOL)
    if rtype == "string":
        return Scalar(ScalarType.STR)
    if rtype == "array":
        return Arr((), None, Unknown())
    if rtype == "null":
        return NULL
    return Unknown()


def _cmp_op(fn):
    return lambda a, b: fn(a, b)


_BINARY = {
    Op.CONCAT: lambda a, b: phpsem.to_str(a) + phpsem.to_str(b),
    Op.ADD: lambda a, b: phpsem.arith("+", a, b),
    Op.SUB: lambda a, b: phpsem.arith("-", a, b),
    Op.MUL: lambda a, b: phpsem.arith("*", a, b),
    Op.DIV: lambda a, b: phpsem.arith("/", a, b),
    Op.MOD: lambda a, b: phpsem.arith("%", a, b),
    Op.POW: lambda a, b: phpsem.arith("**", a, b),
    Op.BW_OR: lambda a, b: phpsem.bitwise("|", a, b),
    Op.BW_AND: lambda a, b: phpsem.bitwise("&", a, b),
    Op.BW_XOR: lambda a, b: phpsem.bitwise("^", a, b),
    Op.SL: lambda a, b: phpsem.bitwise("<<", a, b),
    Op.SR: lambda a, b: phpsem.bitwise(">>", a, b),
    Op.IS_EQUAL: phpsem.loose_eq,
    Op.IS_NOT_EQUAL: lambda a, b: not phpsem.loose_eq(a, b),
    Op.IS_IDENTICAL: phpsem.strict_eq,
    Op.IS_NOT_IDENTICAL: lambda a, b: not phpsem.strict_eq(a, b),
    Op.IS_SMALLER: lambda a, b: phpsem.compare(a, b) < 0,
    Op.IS_SMALLER_OR_EQUAL: lambda a, b: phpsem.compare(a, b) <= 0,
    Op.SPACESHIP: phpsem.compare,
    Op.BOOL_AND: lambda a, b: phpsem.to_bool(a) and phpsem.to_bool(b),
    Op.BOOL_OR: lambda a, b: phpsem.to_bool(a) or phpsem.to_bool(b),
    Op.BOOL_XOR: lambda a, b: phpsem.to_bool(a) != phpsem.to_bool(b),
    Op.CASE: phpsem.loose_eq,
}
_BINARY_TYPE = {k: ScalarType.BOOL for k in (
    Op.IS_EQUAL, Op.IS_NOT_EQUAL, Op.IS_IDENTICAL, Op.IS_NOT_IDENTICAL, Op.IS_SMALLER,
    Op.IS_SMALLER_OR_EQUAL, Op.BOOL_AND, Op.BOOL_OR, Op.BOOL_XOR, Op.CASE)}
_BINARY_TYPE[Op.SPACESHIP] = ScalarType.INT


# ==================================================================== opcode handlers

def _h_assign(an, st, op, act, calls, index):
    v = an.val(st, op.op2)
    if op.op1.kind is OperandKind.CV:
        an.write_cv(st, op.op1.value, v)
    else:
        an.ref_write(st, an.as_ref(st, op.op1), v, act)
    an.set_result(st, op.result, v)


def _h_qm_assign(an, st, op, act, calls, index):
    an.set_result(st, op.result, an.val(st, op.op1))


def _read_target(an, st, operand, act):
    if operand.kind is OperandKind.CV:
        return an.read_cv(st, operand.value)
    return an.ref_read(st, an.as_ref(st, operand), act)


def _write_target(an, st, operand, v, act):
    if operand.kind is OperandKind.CV:
        an.write_cv(st, operand.value, v)
    else:
        an.ref_write(st, an.as_ref(st, operand), v, act)


def _h_assign_concat(an, st, op, act, calls, index):
    cur = _read_target(an, st, op.op1, act)
    v = an.binary(Op.CONCAT, cur, an.val(st, op.op2))
    _write_target(an, st, op.op1, v, act)
    an.set_result(st, op.result, v)


def _h_incdec(an, st, op, act, calls, index):
    cur = _read_target(an, st, op.op1, act)
    fn = phpsem.increment if op.opcode in (Op.PRE_INC, Op.POST_INC) else phpsem.decrement
    new = an.unary(fn, cur, ScalarType.UNKNOWN)
    _write_target(an, st, op.op1, new, act)
    pre = op.opcode in (Op.PRE_INC, Op.PRE_DEC)
    an.set_result(st, op.result, new if pre else _with_taint(cur, EMPTY, ()))


def _h_bool(an, st, op, act, calls, index):
    outs = bool_outcomes(an.val(st, op.op1))
    if op.opcode is Op.BOOL_NOT:
        outs = {not b for b in outs}
    an.set_result(st, op.result, scalar_of(sorted(outs)))


def _h_bw_not(an, st, op, act, calls, index):
    v = an.val(st, op.op1)
    an.set_result(st, op.result, an.unary(lambda x: phpsem.bitwise("~", x), v, ScalarType.UNKNOWN))


def _h_cast(an, st, op, act, calls, index):
    v = an.val(st, op.op1)
    ext = op.extended_value
    if ext == ir.CAST_STRING:
        if isinstance(v, (Unknown, Source)):
            r = _fresh_scalar(ScalarType.STR, *own_taint(v))
        else:
            r = an.unary(phpsem.to_str, v, ScalarType.STR, keep_taint=True)
    elif ext == ir.CAST_INT:
        r = an.unary(phpsem.to_int, v, ScalarType.INT)
    elif ext == ir.CAST_FLOAT:
        r = an.unary(phpsem.to_float, v, ScalarType.FLOAT)
    elif ext == ir.CAST_BOOL:
        r = scalar_of(sorted(bool_outcomes(v)))
    elif ext == ir.CAST_ARRAY:
        if isinstance(v, (Arr, Source)):
            r = v
        elif isinstance(v, Scalar):
            if v.values == (None,):
                r = Arr()
            elif v.values is not None and None not in v.values:
                r = Arr(((0, v),), 1, None)
            else:
                r = Arr((), None, v)
        else:
            r = Arr((), None, Unknown(*own_taint(v)))
    else:
        r = v if isinstance(v, Obj) else Unknown(*own_taint(v))
    an.set_result(st, op.result, r)


def _h_init_array(an, st, op, act, calls, index):
    if op.opcode is Op.INIT_ARRAY:
        arr = Arr()
    else:
        arr = an.val(st, op.result)
        if not isinstance(arr, Arr):
            arr = Arr()
    if op.op1.used:
        v = an.val(st, op.op1)
        key = APPEND if not op.op2.used else an.key_of(an.val(st, op.op2))
        arr = arr_write(arr, key, v)
    an.set_result(st, op.result, arr)


def _h_fetch_dim_r(an, st, op, act, calls, index):
    base = an.val(st, op.op1)
    an.set_result(st, op.result, an.dim_read(st, base, an.val(st, op.op2), act, op.source_line))


def _h_fetch_dim_w(an, st, op, act, calls, index):
    ref = an.as_ref(st, op.op1)
    key = APPEND if not op.op2.used else an.key_of(an.val(st, op.op2))
    an.set_result(st, op.result, Ref(ref.root, ref.path + (key,)))


def _prop_name(an, st, operand):
    v = an.val(st, operand)
    if isinstance(v, Scalar) and v.is_single:
        return phpsem.to_str(v.concrete)
    return ANY


def _h_fetch_obj_r(an, st, op, act, calls, index):
    obj = an.val(st, op.op1)
    an.set_result(st, op.result, an.prop_read(st, obj, _prop_name(an, st, op.op2), act,
                                              line=op.source_line))


def _h_fetch_obj_w(an, st, op, act, calls, index):
    obj = an.val(st, op.op1)
    prop = _prop_name(an, st, op.op2)
    if isinstance(obj, Obj) and prop is not ANY:
        an.set_result(st, op.result, Ref(("o", obj.oids, prop)))
    else:
        an.set_result(st, op.result, Ref(("void",)))


def _names_of(v):
    c = literal_choices(v) if isinstance(v, Scalar) else None
    if c is None:
        return None
    return sorted({phpsem.to_str(x) for x in c if not isinstance(x, ArrayLit)})


def _h_fetch_r(an, st, op, act, calls, index):
    line = op.source_line
    if op.extended_value == ir.FETCH_GLOBAL and op.op1.kind is OperandKind.CONST:
        name = op.op1.value
        if "::$" in name:
            key, default = an.static_prop_key(name)
            v = st.world.globals.get(key, default)
        else:
            v = an.superglobal(st, name, act, line)
        an.set_result(st, op.result, v)
        return
    names = _names_of(an.val(st, op.op1))
    if names is None:
        an.set_result(st, op.result, an.any_local(st))
        return
    out = None
    for n in names:
        if n in TAINT_SOURCES or n in ("_SERVER", "_SESSION", "_ENV", "GLOBALS"):
            v = an.superglobal(st, n, act, line)
        else:
            v = an.read_cv(st, n)
        out = v if out is None else join(out, v)
    an.set_result(st, op.result, out if out is not None else NULL)


def _h_fetch_w(an, st, op, act, calls, index):
    if op.extended_value == ir.FETCH_GLOBAL and op.op1.kind is OperandKind.CONST:
        name = op.op1.value
        if "::$" in name:
            key, default = an.static_prop_key(name)
            if key not in st.world.globals:
                st.world.globals[key] = default
            an.set_result(st, op.result, Ref(("g", key)))
        else:
            an.set_result(st, op.result, Ref(("sg", name)))
        return
    names = _names_of(an.val(st, op.op1))
    if names is None:
        ref = Ref(("cvany",))
    elif len(names) == 1:
        n = names[0]
        ref = Ref(("sg", n)) if n in TAINT_SOURCES else Ref(("cv", n))
    else:
        ref = Ref(("cvset", tuple(names)))
    an.set_result(st, op.result, ref)


def _h_fetch_constant(an, st, op, act, calls, index):
    name = op.op2.value
    consts = st.world.consts
    if "::" in name:
        cls, _, cname = name.partition("::")
        if cls.lower() == "static":
            cls = act.called_class or cls
        v = None
        for cm in an.class_chain(cls):
            v = consts.get(f"{cm.name}::{cname}")
            if v is not None:
                break
        if v is None:
            v = consts.get(f"{cls}::{cname}")
    else:
        bare = name.lstrip("\\")
        v = consts.get(bare)
        if v is None and bare in PREDEFINED_CONSTANTS:
            v = lit(PREDEFINED_CONSTANTS[bare])
        if v is None:
            low = bare.lower()
            if low in ("true", "false", "null"):
                v = lit({"true": True, "false": False, "null": None}[low])
    if v is None:
        an.note(f"{act.unit.file}:{op.source_line}: undefined constant {name}")
        v = Scalar()
    an.set_result(st, op.result, v)


def _h_declare_const(an, st, op, act, calls, index):
    names = _names_of(an.val(st, op.op1))
    v = an.val(st, op.op2)
    ok = False
    if names is not None and len(names) == 1:
        if names[0] not in st.world.consts:
            st.world.consts[names[0]] = v
            ok = True
    else:
        an.note(f"{act.unit.file}:{op.source_line}: define() with non-constant name ignored")
    an.set_result(st, op.result, lit(ok))


def _h_echo(an, st, op, act, calls, index):
    an.check_sink(st, act, op.source_line, "XSS", "echo", 0, an.val(st, op.op1))


def _h_isset(an, st, op, act, calls, index):
    ext = op.extended_value
    empty = bool(ext & ir.ISSET_EMPTY)
    if ext & ir.ISSET_DIM:
        base = an.val(st, op.op1)
        key = an.val(st, op.op2)
        if isinstance(base, Arr) and isinstance(key, Scalar) and key.is_single:
            try:
                nk = phpsem.normalize_key(key.concrete)
            except PhpRuntimeError:
                nk = None
            if nk is not None and base.has(nk):
                v = arr_read(base, nk)
            elif nk is not None and base.default is None and base.next_index is not None:
                v = NULL
            else:
                v = Unknown()
        elif isinstance(base, Arr) and not base.elems and base.default is None \
                and base.next_index is not None:
            v = NULL
        elif isinstance(base, Scalar) and base.values == (None,):
            v = NULL
        else:
            v = Unknown()
    elif ext & ir.ISSET_OBJ:
        v = an.prop_read(st, an.val(st, op.op1), _prop_name(an, st, op.op2), act, magic=False)
    else:
        v = an.val(st, op.op1)
    if empty:
        outs = {True} if isset_outcomes(v) == {False} else {not b for b in bool_outcomes(v)}
        if False in isset_outcomes(v):
            outs.add(True)
    else:
        outs = isset_outcomes(v)
    an.set_result(st, op.result, scalar_of(sorted(outs)))


def _h_unset(an, st, op, act, calls, index):
    ext = op.extended_value
    if ext == ir.UNSET_DIM:
        key = an.key_of(an.val(st, op.op2))
        an.ref_unset(st, an.as_ref(st, op.op1), key, act)
    elif ext == ir.UNSET_OBJ:
        obj = an.val(st, op.op1)
        prop = _prop_name(an, st, op.op2)
        if isinstance(obj, Obj) and prop is not ANY and len(obj.oids) == 1:
            oid = next(iter(obj.oids))
            cell = st.world.heap.get(oid)
            if cell is not None:
                st.world.heap[oid] = ObjCell(cell.cls, tuple(p for p in cell.props if p[0] != prop))
    elif op.op1.kind is OperandKind.CV:
        name = op.op1.value
        if name in st.frame.aliases:
            del st.frame.aliases[name]
        else:
            st.frame.locals.pop(name, None)


def _h_fe_reset(an, st, op, act, calls, index):
    an.set_result(st, op.result, Iter(an.val(st, op.op1), 0))


def _h_fe_key(an, st, op, act, calls, index):
    an.set_result(st, op.result, st.frame.temps.get(("K", op.op1.value), Scalar()))


def _h_bind_global(an, st, op, act, calls, index):
    if st.frame.is_global:
        return
    name = op.op1.value
    gname = op.op2.value if op.op2.kind is OperandKind.CONST else name
    st.frame.aliases[name] = ("g", gname)
    st.frame.locals.pop(name, None)


def _h_bind_static(an, st, op, act, calls, index):
    name = op.op1.value
    unit = act.unit
    key = (unit.file, unit.name, name)
    if key not in st.world.statics:
        st.world.statics[key] = lit(unit.statics.get(name))
    st.frame.aliases[name] = ("s", key)


def _h_recv(an, st, op, act, calls, index):
    i = op.op1.value
    if op.opcode is Op.RECV_VARIADIC:
        rest = act.args[i:]
        v = Arr(tuple(enumerate(rest)), len(rest), None)
    elif i < len(act.args):
        v = act.args[i]
    elif op.opcode is Op.RECV_INIT:
        v = an.val(st, op.op2)
    else:
        v = NULL
    an.set_result(st, op.result, v)


def _h_instanceof(an, st, op, act, calls, index):
    obj = an.val(st, op.op1)
    cls = _names_of(an.val(st, op.op2))
    if isinstance(obj, Obj) and cls:
        outs = set()
        for oid in obj.oids:
            cell = st.world.heap.get(oid)
            if cell is not None:
                outs.update(an.is_subclass(cell.cls, c) for c in cls)
        v = scalar_of(sorted(outs)) if outs else BOOL_ANY
    elif isinstance(obj, (Scalar, Arr)):
        v = lit(False)
    else:
        v = BOOL_ANY
    an.set_result(st, op.result, v)


def _h_new(an, st, op, act, calls, index):
    names = _names_of(an.val(st, op.op1))
    line = op.source_line
    if names is None:
        an.note(f"{act.unit.file}:{line}: new with unknown class")
        calls.append(_Call("new", [], None, line))
        an.set_result(st, op.result, Unknown(*own_taint(an.val(st, op.op1))))
        return
    targets, oids = [], []
    for n in names:
        if n.lower() == "static":
            n = act.called_class or n
        cm = an.find_class(n)
        cls = cm.name if cm is not None else n
        oid = ("obj", act.unit.file, line, index, cls, tuple(site[:2] for site in act.chain[-MEMO_CHAIN:]))
        props = []
        for c in reversed(an.class_chain(cls)):
            for pname, pm in c.properties.items():
                if not pm.is_static:
                    props = [(k, v) for k, v in props if k != pname] + [(pname, lit(pm.default))]
        cell = ObjCell(cls, tuple(props))
        old = st.world.heap.get(oid)
        if old is not None and old != cell:
            merged = dict(old.props)
            for pk, pv in cell.props:
                merged[pk] = join(merged[pk], pv) if pk in merged else pv
            cell = ObjCell(cls, tuple(merged.items()))
        st.world.heap[oid] = cell
        targets.append((oid, cls))
        oids.append(oid)
    calls.append(_Call("new", targets, None, line))
    an.set_result(st, op.result, Obj(frozenset(oids)))


def _h_init_fcall(an, st, op, act, calls, index):
    calls.append(_Call("func", op.op2.value, None, op.source_line))


def _h_init_dynamic(an, st, op, act, calls, index):
    calls.append(_Call("dyn", an.val(st, op.op1), None, op.source_line))


def _h_init_method(an, st, op, act, calls, index):
    calls.append(_Call("method", an.val(st, op.op1), an.val(st, op.op2), op.source_line))


def _h_init_static(an, st, op, act, calls, index):
    calls.append(_Call("static", an.val(st, op.op1), an.val(st, op.op2), op.source_line))


def _h_send(an, st, op, act, calls, index):
    if not calls:
        return
    v = an.val(st, op.op1)
    call = calls[-1]
    if op.opcode is Op.SEND_UNPACK:
        if isinstance(v, Arr) and v.default is None and v.next_index is not None:
            call.args.extend((x, None) for _, x in v.elems)
        else:
            call.args.append((Unknown(*deep_taint(v, st.world.heap)), None))
        return
    call.args.append((v, op.op1))


def _h_do_fcall(an, st, op, act, calls, index):
    if not calls:
        an.set_result(st, op.result, Unknown())
        return None
    call = calls.pop()
    r = an.do_call(st, act, call)
    if r is DEAD:
        return DEAD
    if call.kind != "new":
        an.set_result(st, op.result, r)
    return None


def _h_include(an, st, op, act, calls, index):
    r = an.do_include(st, act, op)
    if r is DEAD:
        return DEAD
    an.set_result(st, op.result, r)
    return None


_HANDLERS = {
    Op.ASSIGN: _h_assign, Op.QM_ASSIGN: _h_qm_assign, Op.ASSIGN_CONCAT: _h_assign_concat,
    Op.PRE_INC: _h_incdec, Op.PRE_DEC: _h_incdec, Op.POST_INC: _h_incdec, Op.POST_DEC: _h_incdec,
    Op.BOOL: _h_bool, Op.BOOL_NOT: _h_bool, Op.BW_NOT: _h_bw_not, Op.CAST: _h_cast,
    Op.INIT_ARRAY: _h_init_array, Op.ADD_ARRAY_ELEMENT: _h_init_array,
    Op.FETCH_DIM_R: _h_fetch_dim_r, Op.FETCH_DIM_W: _h_fetch_dim_w,
    Op.FETCH_OBJ_R: _h_fetch_obj_r, Op.FETCH_OBJ_W: _h_fetch_obj_w,
    Op.FETCH_R: _h_fetch_r, Op.FETCH_W: _h_fetch_w,
    Op.FETCH_CONSTANT: _h_fetch_constant, Op.DECLARE_CONST: _h_declare_const,
    Op.ECHO: _h_echo, Op.ISSET_ISEMPTY: _h_isset, Op.UNSET: _h_unset,
    Op.FE_RESET: _h_fe_reset, Op.FE_KEY: _h_fe_key,
    Op.BIND_GLOBAL: _h_bind_global, Op.BIND_STATIC: _h_bind_static,
    Op.RECV: _h_recv, Op.RECV_INIT: _h_recv, Op.RECV_VARIADIC: _h_recv,
    Op.INSTANCEOF: _h_instanceof, Op.NEW: _h_new,
    Op.INIT_FCALL: _h_init_fcall, Op.INIT_DYNAMIC_CALL: _h_init_dynamic,
    Op.INIT_METHOD_CALL: _h_init_method, Op.INIT_STATIC_METHOD_CALL: _h_init_static,
    Op.SEND_VAL: _h_send, Op.SEND_VAR: _h_send, Op.SEND_REF: _h_send, Op.SEND_UNPACK: _h_send,
    Op.DO_FCALL: _h_do_fcall, Op.INCLUDE_OR_EVAL: _h_include,
}


# ==================================================================== intrinsics
# Calls that need the caller's frame or the call machinery itself.

def _i_func_get_args(an, st, act, args, ops, line):
    return Arr(tuple(enumerate(act.args)), len(act.args), None)


def _i_func_num_args(an, st, act, args, ops, line):
    return lit(len(act.args))


def _i_compact(an, st, act, args, ops, line):
    items = []
    for a in args:
        names = _names_of(a)
        if names is None:
            return Arr((), None, an.any_local(st))
        for n in names:
            if n in st.frame.locals or n in st.frame.aliases:
                items.append((phpsem.normalize_key(n), an.read_cv(st, n)))
    out = Arr()
    for k, v in items:
        out = arr_write(out, k, v)
    return out


def _i_extract(an, st, act, args, ops, line):
    a = args[0] if args else NULL
    if isinstance(a, Arr) and a.default is None:
        for k, v in a.elems:
            if isinstance(k, str) and k != "this":
                an.write_cv(st, k, v)
        return lit(len(a.elems))
    an.ref_write(st, Ref(("cvany",)), Unknown(*deep_taint(a, st.world.heap)), act, weak=True)
    return Scalar(ScalarType.INT)


def _i_call_user_func(an, st, act, args, ops, line):
    if not args:
        return NULL
    return an.call_dynamic(st, act, args[0], args[1:], ops[1:], line)


def _i_call_user_func_array(an, st, act, args, ops, line):
    if len(args) < 2:
        return NULL
    packed = args[1]
    if isinstance(packed, Arr) and packed.default is None and packed.next_index is not None:
        rest = [x for _, x in packed.elems]
    else:
        rest = [Unknown(*deep_taint(packed, st.world.heap))]
    return an.call_dynamic(st, act, args[0], rest, [None] * len(rest), line)


def _i_function_exists(an, st, act, args, ops, line):
    names = _names_of(args[0]) if args else None
    if not names:
        return BOOL_ANY
    return scalar_of(sorted({an.lookup_function(n, st.world.env) is not None
                             or n.lower() in an.registry for n in names}))


def _i_method_exists(an, st, act, args, ops, line):
    if len(args) < 2:
        return lit(False)
    names = _names_of(args[1])
    obj = args[0]
    classes = []
    if isinstance(obj, Obj):
        classes = [st.world.heap[o].cls for o in obj.oids if o in st.world.heap]
    else:
        classes = _names_of(obj) or []
    if not names or not classes:
        return BOOL_ANY
    return scalar_of(sorted({an.find_method(c, n) is not None for c in classes for n in names}))


def _i_class_exists(an, st, act, args, ops, line):
    names = _names_of(args[0]) if args else None
    if not names:
        return BOOL_ANY
    return scalar_of(sorted({an.find_class(n) is not None for n in names}))


def _i_get_class(an, st, act, args, ops, line):
    obj = args[0] if args else st.frame.locals.get("this", NULL)
    if isinstance(obj, Obj):
        return scalar_of(sorted({st.world.heap[o].cls for o in obj.oids if o in st.world.heap}))
    return Scalar(ScalarType.STR)


def _i_array_map(an, st, act, args, ops, line):
    if len(args) < 2:
        return Arr()
    cb, arr = args[0], args[1]
    if isinstance(cb, Scalar) and cb.values == (None,):
        return arr
    elem = arr_read(arr, ANY) if isinstance(arr, Arr) else Unknown(*deep_taint(arr, st.world.heap))
    names = _names_of(cb)
    if names:
        r = an.call_dynamic(st, act, cb, [elem], [None], line)
        if r is DEAD:
            return DEAD
        if isinstance(arr, Arr) and arr.default is None and arr.next_index is not None:
            return Arr(tuple((k, r) for k, _ in arr.elems), arr.next_index, None)
        return Arr((), None, r)
    t = combine_taint(deep_taint(a, st.world.heap) for a in args[1:])
    return Arr((), None, Unknown(*t))


_INTRINSICS = {
    "func_get_args": _i_func_get_args, "func_num_args": _i_func_num_args,
    "compact": _i_compact, "extract": _i_extract,
    "call_user_func": _i_call_user_func, "call_user_func_array": _i_call_user_func_array,
    "function_exists": _i_function_exists, "method_exists": _i_method_exists,
    "class_exists": _i_class_exists, "get_class": _i_get_class, "array_map": _i_array_map,
}


def analyze_entry(db, entry_file, rules=None, config=None):
    """Analyze one entry file; returns its sorted Finding list."""
    return Analyzer(db, rules, config).analyze_entry(entry_file).findings


__all__ = ["Analyzer", "AnalysisError", "EntryResult", "Finding", "analyze_entry",
           "bool_outcomes", "DEAD"]
