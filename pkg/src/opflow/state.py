"""Abstract values and the per-path analysis state.

Values are immutable.  A ``Scalar`` may carry a small set of candidate
literal values; arrays keep per-key elements plus an optional summary cell
for writes through unknown keys; objects are references to heap cells.

A value is *effectively tainted* when its taint set is non-empty and its
sanitizer stack is empty.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Optional

from .ir import ArrayLit, OpcodeKind, TypeTag, lit_key

VALUE_SET_CAP = 8
EMPTY = frozenset()


@dataclass(frozen=True, order=True)
class TaintLabel:
    source_kind: str        # GET, POST, FILES, COOKIE, REQUEST
    file: str
    line: int
    access_path: str

    def describe(self) -> str:
        path = f"['{self.access_path}']" if self.access_path else ""
        return f"$_{self.source_kind}{path}"


class ScalarType(enum.Enum):
    INT = "int"
    FLOAT = "float"
    STR = "string"
    BOOL = "bool"
    NULL = "null"
    UNKNOWN = "unknown"


def _type_of(lit) -> ScalarType:
    if lit is None:
        return ScalarType.NULL
    if isinstance(lit, bool):
        return ScalarType.BOOL
    if isinstance(lit, int):
        return ScalarType.INT
    if isinstance(lit, float):
        return ScalarType.FLOAT
    return ScalarType.STR


class Classification(enum.Enum):
    SCALAR = "SCALAR"
    ARRAY = "ARRAY"
    OBJECT = "OBJECT"
    UNKNOWN = "UNKNOWN"


# ------------------------------------------------------------------ values

@dataclass(frozen=True, eq=False)
class Scalar:
    stype: ScalarType = ScalarType.UNKNOWN
    values: Optional[tuple] = None      # candidate literals, canonical order; None = unknown
    taints: frozenset = EMPTY
    stack: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "_key", (
            "S", self.stype, None if self.values is None else tuple(lit_key(v) for v in self.values),
            self.taints, self.stack))

    def __eq__(self, other):
        return isinstance(other, Scalar) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    @property
    def concrete(self):
        """The single concrete literal, or raise if not exactly one."""
        return self.values[0]

    @property
    def is_single(self) -> bool:
        return self.values is not None and len(self.values) == 1


@dataclass(frozen=True, eq=False)
class Arr:
    elems: tuple = ()                   # ((key, value), ...) in insertion order
    next_index: Optional[int] = 0       # None: unknown (appends go to the summary)
    default: Optional[object] = None    # summary of writes through unknown keys

    def __post_init__(self):
        object.__setattr__(self, "_map", dict(self.elems))
        object.__setattr__(self, "_key", ("A", self.elems, self.next_index, self.default))

    def __eq__(self, other):
        return isinstance(other, Arr) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def get(self, key):
        return self._map.get(key)

    def has(self, key) -> bool:
        return key in self._map


@dataclass(frozen=True)
class Obj:
    oids: frozenset                     # heap cell ids this reference may point to


@dataclass(frozen=True)
class Unknown:
    taints: frozenset = EMPTY
    stack: tuple = ()


@dataclass(frozen=True)
class Source:
    """A taint-source superglobal array itself (``$_GET`` etc.) read at a site."""
    kind: str
    file: str = ""
    line: int = 0


@dataclass(frozen=True)
class Iter:
    """foreach iterator: the subject and the next position (None if unknown)."""
    subject: object
    pos: Optional[int]


@dataclass(frozen=True)
class Ref:
    """Write handle produced by FETCH_*_W: a root plus a key path.

    root is ``("cv", name)``, ``("g", name)`` or ``("o", oids, prop)``.
    Path entries are literal keys, ``ANY`` for an unknown key, or ``APPEND``.
    """
    root: tuple
    path: tuple = ()


class _Marker:
    def __init__(self, name):
        self.name = name

    def __repr__(self):
        return self.name

    def __reduce__(self):
        return (_marker, (self.name,))


def _marker(name):
    return ANY if name == "ANY" else APPEND


ANY = _Marker("ANY")
APPEND = _Marker("APPEND")

NULL = Scalar(ScalarType.NULL, (None,))
UNKNOWN_SCALAR = Scalar()
EMPTY_ARR = Arr()


def lit(v, taints=EMPTY, stack=()):
    """Abstract value for a literal."""
    if isinstance(v, ArrayLit):
        return Arr(tuple((k, lit(x, taints, stack)) for k, x in v.items),
                   _next_index_of(v.keys()), None)
    return Scalar(_type_of(v), (v,), taints, stack)


def scalar_of(values, taints=EMPTY, stack=(), stype=None):
    """Scalar from candidate literals (None or too many means unknown)."""
    if values is None:
        return Scalar(stype or ScalarType.UNKNOWN, None, taints, stack)
    uniq = {}
    for v in values:
        uniq.setdefault(lit_key(v), v)
    if len(uniq) > VALUE_SET_CAP:
        types = {_type_of(v) for v in uniq.values()}
        return Scalar(types.pop() if len(types) == 1 else ScalarType.UNKNOWN, None, taints, stack)
    vals = tuple(uniq[k] for k in sorted(uniq))
    types = {_type_of(v) for v in vals}
    st = types.pop() if len(types) == 1 else ScalarType.UNKNOWN
    return Scalar(st, vals, taints, stack)


def _next_index_of(keys) -> int:
    ints = [k for k in keys if isinstance(k, int)]
    return max(ints) + 1 if ints and max(ints) >= 0 else 0


def to_literal(v):
    """Literal for a fully-known, single-valued value; else raise ValueError."""
    if isinstance(v, Scalar) and v.is_single:
        return v.values[0]
    if isinstance(v, Arr) and v.default is None and v.next_index is not None:
        return ArrayLit(tuple((k, to_literal(x)) for k, x in v.elems))
    raise ValueError("not concrete")


def is_concrete(v) -> bool:
    try:
        to_literal(v)
        return True
    except ValueError:
        return False


def literal_choices(v, cap=VALUE_SET_CAP):
    """All literal values ``v`` may take, or None when unbounded."""
    if isinstance(v, Scalar):
        return None if v.values is None else list(v.values)
    if isinstance(v, Arr):
        if v.default is not None or v.next_index is None:
            return None
        per_key = []
        for _, x in v.elems:
            c = literal_choices(x, cap)
            if c is None:
                return None
            per_key.append(c)
        total = 1
        for c in per_key:
            total *= len(c)
            if total > cap:
                return None
        keys = [k for k, _ in v.elems]
        return [ArrayLit(tuple(zip(keys, combo))) for combo in itertools.product(*per_key)]
    return None


# ------------------------------------------------------------------ taint helpers

def own_taint(v):
    """(taints, stack) of a value, looking through arrays but not the heap."""
    if isinstance(v, (Scalar, Unknown)):
        return v.taints, v.stack
    if isinstance(v, Arr):
        return _combine(own_taint(x) for x in _arr_values(v))
    if isinstance(v, Source):
        return frozenset({TaintLabel(v.kind, v.file, v.line, "*")}), ()
    if isinstance(v, Iter):
        return own_taint(v.subject)
    return EMPTY, ()


def _arr_values(a: Arr):
    for _, x in a.elems:
        yield x
    if a.default is not None:
        yield a.default


def deep_taint(v, heap, _seen=None):
    """(taints, stack) including object properties reachable through the heap."""
    if isinstance(v, Obj):
        seen = _seen if _seen is not None else set()
        parts = []
        for oid in sorted(v.oids, key=repr):
            if oid in seen:
                continue
            seen.add(oid)
            cell = heap.get(oid)
            if cell is not None:
                parts.extend(deep_taint(x, heap, seen) for _, x in cell.props)
        return _combine(parts)
    if isinstance(v, Arr):
        return _combine(deep_taint(x, heap, _seen) for x in _arr_values(v))
    return own_taint(v)


def _combine(pairs):
    """Union taints; sanitizer stacks combine to the common suffix of tainted parts."""
    taints = set()
    stacks = []
    for t, s in pairs:
        if t:
            taints |= t
            stacks.append(s)
    return frozenset(taints), common_suffix(stacks)


def combine_taint(pairs):
    return _combine(pairs)


def common_suffix(stacks) -> tuple:
    if not stacks:
        return ()
    first = stacks[0]
    n = len(first)
    for s in stacks[1:]:
        m = 0
        while m < min(n, len(s)) and first[len(first) - 1 - m] == s[len(s) - 1 - m]:
            m += 1
        n = m
        if n == 0:
            return ()
    return first[len(first) - n:] if n else ()


def effectively_tainted(v, heap=None) -> bool:
    taints, stack = deep_taint(v, heap or {}) if heap is not None else own_taint(v)
    return bool(taints) and not stack


def var_classify(v) -> Classification:
    if isinstance(v, Scalar):
        return Classification.SCALAR
    if isinstance(v, Arr):
        return Classification.ARRAY
    if isinstance(v, Obj):
        return Classification.OBJECT
    return Classification.UNKNOWN


_TAG_CLASS = {TypeTag.SCALAR: Classification.SCALAR, TypeTag.ARRAY: Classification.ARRAY,
              TypeTag.OBJECT: Classification.OBJECT}


def infer_from_opcode(kind: OpcodeKind, operands=()) -> Classification:
    """Classification implied by an opcode's type tag (and operands for ASSIGN)."""
    if kind in (OpcodeKind.ASSIGN, OpcodeKind.QM_ASSIGN):
        src = operands[-1] if operands else None
        if isinstance(src, ArrayLit):
            return Classification.ARRAY
        if src is None or isinstance(src, (bool, int, float, str)):
            return Classification.SCALAR
        return var_classify(src)
    if kind is OpcodeKind.ASSIGN_OBJ:
        return Classification.OBJECT
    return _TAG_CLASS.get(kind.tag, Classification.UNKNOWN)


# ------------------------------------------------------------------ join / widen

def join(a, b):
    if a is b or a == b:
        return a
    if isinstance(a, Scalar) and isinstance(b, Scalar):
        taints, stack = _combine([(a.taints, a.stack), (b.taints, b.stack)])
        if a.values is None or b.values is None:
            st = a.stype if a.stype == b.stype else ScalarType.UNKNOWN
            return Scalar(st, None, taints, stack)
        return scalar_of(a.values + b.values, taints, stack)
    if isinstance(a, Arr) and isinstance(b, Arr):
        return _join_arr(a, b)
    if isinstance(a, Obj) and isinstance(b, Obj):
        return Obj(a.oids | b.oids)
    if isinstance(a, Iter) and isinstance(b, Iter):
        if a.subject == b.subject:
            return Iter(a.subject, a.pos if a.pos == b.pos else None)
        return Iter(join(a.subject, b.subject), None)
    taints, stack = _combine([own_taint(a), own_taint(b)])
    return Unknown(taints, stack)


def _join_arr(a: Arr, b: Arr) -> Arr:
    elems = []
    for k, x in a.elems:
        y = b.get(k)
        elems.append((k, join(x, y) if y is not None else join(x, NULL)))
    for k, y in b.elems:
        if not a.has(k):
            elems.append((k, join(NULL, y)))
    if [k for k, _ in a.elems] != [k for k, _ in b.elems]:
        # orders disagree: use a canonical order so that join stays commutative
        elems.sort(key=lambda kv: lit_key(kv[0]))
    nxt = a.next_index if a.next_index == b.next_index else None
    if a.default is None:
        dflt = b.default
    elif b.default is None:
        dflt = a.default
    else:
        dflt = join(a.default, b.default)
    return Arr(tuple(elems), nxt, dflt)


def widen(old, new):
    """Join that forgets concrete values and collapses growing arrays."""
    if old == new:
        return old
    j = join(old, new)
    return _forget(j, old)


def _forget(v, old):
    if isinstance(v, Scalar):
        if v.values is None or (isinstance(old, Scalar) and old == v):
            return v
        return Scalar(v.stype, None, v.taints, v.stack)
    if isinstance(v, Arr):
        if not isinstance(old, Arr):
            return _collapse(v)
        if {k for k, _ in v.elems} != {k for k, _ in old.elems}:
            return _collapse(v, keep=old)
        elems = tuple((k, _forget(x, old.get(k))) for k, x in v.elems)
        dflt = v.default
        if dflt is not None and old.default != dflt:
            dflt = _forget(dflt, old.default)
        return Arr(elems, v.next_index, dflt)
    return v


def _collapse(v: Arr, keep: Optional[Arr] = None) -> Arr:
    """Fold keys not present in ``keep`` into the summary cell."""
    kept, folded = [], []
    for k, x in v.elems:
        if keep is not None and keep.has(k):
            kept.append((k, _forget(x, keep.get(k))))
        else:
            folded.append(x)
    dflt = v.default
    for x in folded:
        dflt = x if dflt is None else join(dflt, x)
    if dflt is not None:
        dflt = _forget(dflt, None)
    return Arr(tuple(kept), None, dflt)


# ------------------------------------------------------------------ array paths

def arr_read(a: Arr, key):
    """Read a literal key (or ANY).

    A present key joins its element with the summary cell.  An absent key
    yields null joined with every element and the summary: the analysis
    cannot rule out that the index was populated on a path it summarized.
    """
    if key is ANY:
        out = NULL
        for x in _arr_values(a):
            out = join(out, x)
        return out
    x = a.get(key)
    if x is not None:
        return x if a.default is None else join(x, a.default)
    out = NULL
    for y in _arr_values(a):
        out = join(out, y)
    return out


def arr_write(a: Arr, key, value) -> Arr:
    if key is APPEND:
        if a.next_index is None:
            dflt = value if a.default is None else join(a.default, value)
            return Arr(a.elems, None, dflt)
        key = a.next_index
    if key is ANY:
        dflt = value if a.default is None else join(a.default, value)
        return Arr(a.elems, a.next_index, dflt)
    if a.has(key):
        elems = tuple((k, value if k == key else x) for k, x in a.elems)
    else:
        elems = a.elems + ((key, value),)
    nxt = a.next_index
    if nxt is not None and isinstance(key, int) and key >= nxt:
        nxt = key + 1
    return Arr(elems, nxt, a.default)


def arr_unset(a: Arr, key) -> Arr:
    if key is ANY or key is APPEND:
        return a
    return Arr(tuple((k, x) for k, x in a.elems if k != key), a.next_index, a.default)


# ------------------------------------------------------------------ heap and state

@dataclass(frozen=True)
class ObjCell:
    cls: str
    props: tuple = ()           # ((name, value), ...)

    def get(self, name):
        for k, v in self.props:
            if k == name:
                return v
        return None

    def set(self, name, value) -> "ObjCell":
        if self.get(name) is None:
            return ObjCell(self.cls, self.props + ((name, value),))
        return ObjCell(self.cls, tuple((k, value if k == name else v) for k, v in self.props))


@dataclass(frozen=True)
class Env:
    cwd: str
    include_path: tuple
    included_once: frozenset = EMPTY
    executed: tuple = ()        # files whose top level ran on this path, in order


def join_env(a: Env, b: Env) -> Env:
    if a == b:
        return a
    executed = a.executed + tuple(f for f in b.executed if f not in a.executed)
    return Env(min(a.cwd, b.cwd), a.include_path if a.include_path == b.include_path
               else min(a.include_path, b.include_path),
               a.included_once & b.included_once, executed)


@dataclass
class World:
    """State shared across frames: globals, heap, statics, constants, environment."""
    globals: dict
    heap: dict
    statics: dict
    consts: dict
    env: Env

    def copy(self) -> "World":
        return World(dict(self.globals), dict(self.heap), dict(self.statics),
                     dict(self.consts), self.env)

    def key(self):
        return (tuple(sorted(self.globals.items())), tuple(sorted(self.heap.items(), key=lambda kv: repr(kv[0]))),
                tuple(sorted(self.statics.items(), key=repr)),
                tuple(sorted(self.consts.items())), self.env)


@dataclass
class Frame:
    """One unit activation.  ``locals`` is the world's globals dict at top level."""
    locals: dict
    temps: dict = field(default_factory=dict)
    aliases: dict = field(default_factory=dict)     # cv name -> ("g", name) | ("s", key)
    is_global: bool = False


@dataclass
class State:
    frame: Frame
    world: World

    def copy(self) -> "State":
        w = self.world.copy()
        f = self.frame
        if f.is_global:
            frame = Frame(w.globals, dict(f.temps), dict(f.aliases), True)
        else:
            frame = Frame(dict(f.locals), dict(f.temps), dict(f.aliases), False)
        return State(frame, w)

    def key(self):
        f = self.frame
        loc = () if f.is_global else tuple(sorted(f.locals.items()))
        return (loc, tuple(sorted(f.temps.items())), tuple(sorted(f.aliases.items())),
                f.is_global, self.world.key())

    def __eq__(self, other):
        return isinstance(other, State) and self.key() == other.key()


def _join_maps(a: dict, b: dict, missing=NULL) -> dict:
    if a is b:
        return a
    out = {}
    for k, v in a.items():
        w = b.get(k)
        out[k] = v if w is not None and w == v else join(v, w if w is not None else missing)
    for k, w in b.items():
        if k not in a:
            out[k] = join(missing, w)
    return out


def _join_heap(a: dict, b: dict) -> dict:
    out = dict(a)
    for oid, cb in b.items():
        ca = a.get(oid)
        if ca is None:
            out[oid] = cb
        elif ca != cb:
            props = _join_maps(dict(ca.props), dict(cb.props))
            out[oid] = ObjCell(ca.cls, tuple(props.items()))
    return out


def join_states(a: State, b: State) -> State:
    wa, wb = a.world, b.world
    world = World(_join_maps(wa.globals, wb.globals), _join_heap(wa.heap, wb.heap),
                  _join_maps(wa.statics, wb.statics), _join_consts(wa.consts, wb.consts),
                  join_env(wa.env, wb.env))
    fa, fb = a.frame, b.frame
    temps = _join_maps(fa.temps, fb.temps)
    aliases = dict(fb.aliases)
    aliases.update(fa.aliases)
    if fa.is_global:
        frame = Frame(world.globals, temps, aliases, True)
    else:
        frame = Frame(_join_maps(fa.locals, fb.locals), temps, aliases, False)
    return State(frame, world)


def _join_consts(a: dict, b: dict) -> dict:
    """Constants defined on only one path stay defined (first definition wins in PHP)."""
    out = dict(a)
    for k, v in b.items():
        out[k] = join(out[k], v) if k in out and out[k] != v else v
    return out


def widen_states(old: State, new: State) -> State:
    j = join_states(old, new)
    wo, wj = old.world, j.world
    wj.globals.update({k: widen(wo.globals.get(k, NULL), v) for k, v in wj.globals.items()})
    wj.statics.update({k: widen(wo.statics.get(k, NULL), v) for k, v in wj.statics.items()})
    for oid, cell in list(wj.heap.items()):
        oc = wo.heap.get(oid)
        if oc is not None and oc != cell:
            wj.heap[oid] = ObjCell(cell.cls, tuple((k, widen(oc.get(k) or NULL, v))
                                                   for k, v in cell.props))
    fj = j.frame
    fj.temps.update({k: widen(old.frame.temps.get(k, NULL), v) for k, v in fj.temps.items()})
    if not fj.is_global:
        fj.locals.update({k: widen(old.frame.locals.get(k, NULL), v) for k, v in fj.locals.items()})
    return j
