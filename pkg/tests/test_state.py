from hypothesis import assume, given, settings, strategies as st

from opflow.ir import ArrayLit, OpcodeKind as K
from opflow.state import (ANY, APPEND, NULL, VALUE_SET_CAP, Arr, Classification, Obj, Scalar,
                          ScalarType, Source, TaintLabel, Unknown, arr_read, arr_unset, arr_write,
                          common_suffix, deep_taint, effectively_tainted, infer_from_opcode, join,
                          lit, ObjCell, own_taint, scalar_of, to_literal, var_classify, widen)

G1 = TaintLabel("GET", "/a.php", 1, "x")
G2 = TaintLabel("POST", "/a.php", 2, "y")

# ---------------------------------------------------------------- strategies

_labels = st.frozensets(st.sampled_from([G1, G2]), max_size=2)
_stacks = st.lists(st.sampled_from(["htmlspecialchars", "addslashes", "urlencode"]),
                   max_size=2).map(tuple)
_lits = st.one_of(st.none(), st.booleans(), st.integers(-3, 3), st.sampled_from(["", "a", "b"]),
                  st.sampled_from([0.5, -1.0]))


@st.composite
def scalars(draw):
    taints = draw(_labels)
    stack = draw(_stacks) if taints else ()
    if draw(st.booleans()):
        return scalar_of(None, taints, stack, draw(st.sampled_from(list(ScalarType))))
    return scalar_of(draw(st.lists(_lits, min_size=1, max_size=4)), taints, stack)


def arrays(inner):
    keys = st.one_of(st.integers(0, 3), st.sampled_from(["k", "m"]))
    return st.builds(
        lambda items, nxt_known, dflt: Arr(tuple(dict(items).items()),
                                           (max([k for k, _ in items if isinstance(k, int)],
                                                default=-1) + 1) if nxt_known else None, dflt),
        st.lists(st.tuples(keys, inner), max_size=3), st.booleans(),
        st.one_of(st.none(), inner))


values = st.recursive(
    st.one_of(scalars(), st.builds(Unknown, _labels),
              st.builds(Obj, st.frozensets(st.integers(0, 2), min_size=1, max_size=2))),
    arrays, max_leaves=6)


def leq(a, b):
    return join(a, b) == b


def covers(a, b):
    """b over-approximates a as observed through reads."""
    if isinstance(a, Arr) and isinstance(b, Arr):
        if not all(covers(arr_read(a, k), arr_read(b, k)) for k, _ in a.elems):
            return False
        return a.default is None or covers(a.default, arr_read(b, ANY))
    return leq(a, b)


# ---------------------------------------------------------------- join laws

@given(values, values)
def test_join_commutes(a, b):
    assert join(a, b) == join(b, a)


@given(values)
def test_join_idempotent(a):
    assert join(a, a) == a


@given(values, values)
def test_join_is_an_upper_bound(a, b):
    j = join(a, b)
    assert leq(a, j) and leq(b, j)


@settings(max_examples=300)
@given(scalars(), scalars(), scalars())
def test_scalar_join_associative(a, b, c):
    assert join(join(a, b), c) == join(a, join(b, c))


@given(values, values)
def test_join_preserves_effective_taint(a, b):
    if effectively_tainted(a):
        assert effectively_tainted(join(a, b))


@given(values, values)
def test_join_keeps_every_label(a, b):
    ta, tb = own_taint(a)[0], own_taint(b)[0]
    assert ta | tb <= own_taint(join(a, b))[0]


@given(values, values)
def test_widen_is_above_join(a, b):
    w = widen(a, b)
    assert covers(join(a, b), w)


@given(values)
def test_widen_reaches_a_fixpoint_quickly(a):
    cur = a
    for i in range(3):
        nxt = widen(cur, join(cur, arr_write(cur, ANY, lit(i)) if isinstance(cur, Arr) else cur))
        if nxt == cur:
            break
        cur = nxt
    assert widen(cur, cur) == cur


def test_value_set_cap():
    s = scalar_of(list(range(VALUE_SET_CAP)))
    assert s.values is not None
    over = join(s, lit(VALUE_SET_CAP))
    assert over.values is None and over.stype is ScalarType.INT


def test_join_distinguishes_one_and_true():
    assert len(join(lit(1), lit(True)).values) == 2


# ---------------------------------------------------------------- taint predicate

def test_effective_taint_requires_empty_stack():
    assert effectively_tainted(lit("x", frozenset({G1})))
    assert not effectively_tainted(lit("x", frozenset({G1}), ("htmlspecialchars",)))
    assert not effectively_tainted(lit("x"))


def test_stack_suffix_on_combine():
    assert common_suffix([("a", "b"), ("c", "b")]) == ("b",)
    assert common_suffix([("a",), ()]) == ()
    assert common_suffix([]) == ()
    j = join(lit("x", frozenset({G1}), ("a", "h")), lit("y", frozenset({G2}), ("h",)))
    assert j.stack == ("h",) and j.taints == {G1, G2}


def test_source_array_is_tainted_as_a_whole():
    taints, stack = own_taint(Source("GET", "/f.php", 3))
    assert taints == {TaintLabel("GET", "/f.php", 3, "*")} and stack == ()


def test_deep_taint_follows_the_heap_and_survives_cycles():
    heap = {1: ObjCell("A", (("p", lit("v", frozenset({G1}))), ("self", Obj(frozenset({1})))))}
    assert deep_taint(Obj(frozenset({1})), heap)[0] == {G1}
    assert own_taint(Obj(frozenset({1})))[0] == frozenset()


# ---------------------------------------------------------------- array paths

def test_write_then_read_same_key():
    a = arr_write(Arr(), "k", lit(1))
    assert arr_read(a, "k") == lit(1)


def test_append_uses_next_index():
    a = arr_write(arr_write(Arr(), 5, lit("x")), APPEND, lit("y"))
    assert [k for k, _ in a.elems] == [5, 6] and a.next_index == 7


def test_write_through_unknown_key_goes_to_summary():
    a = arr_write(lit(ArrayLit(((0, "a"),))), ANY, lit("t", frozenset({G1})))
    assert arr_read(a, 0) == join(lit("a"), lit("t", frozenset({G1})))


def test_absent_key_reads_null_joined_with_elements():
    a = lit(ArrayLit(((0, "a"), (1, "b"))))
    assert arr_read(a, 9) == scalar_of([None, "a", "b"])
    assert arr_read(Arr(), 0) == NULL


def test_unset_removes_only_that_key():
    a = arr_unset(lit(ArrayLit(((0, "a"), (1, "b")))), 0)
    assert [k for k, _ in a.elems] == [1] and a.next_index == 2


def test_to_literal_round_trip():
    v = ArrayLit(((0, "a"), ("k", ArrayLit(((1, 2.5),)))))
    assert to_literal(lit(v)) == v


@given(values, st.one_of(st.integers(0, 3), st.sampled_from(["k", "zz"])), scalars())
def test_write_read_law(a, key, v):
    assume(isinstance(a, Arr))
    got = arr_read(arr_write(a, key, v), key)
    assert leq(v, got)


# ---------------------------------------------------------------- classification

def test_var_classify():
    assert var_classify(lit(1)) is Classification.SCALAR
    assert var_classify(Arr()) is Classification.ARRAY
    assert var_classify(Obj(frozenset({0}))) is Classification.OBJECT
    assert var_classify(Unknown()) is Classification.UNKNOWN


def test_infer_from_opcode():
    assert infer_from_opcode(K.CONCAT) is Classification.SCALAR
    assert infer_from_opcode(K.INIT_ARRAY) is Classification.ARRAY
    assert infer_from_opcode(K.NEW) is Classification.OBJECT
    assert infer_from_opcode(K.ASSIGN, ("x", ArrayLit(()))) is Classification.ARRAY
    assert infer_from_opcode(K.ASSIGN, ("x", 3)) is Classification.SCALAR
    assert infer_from_opcode(K.ASSIGN, ("x", Obj(frozenset({1})))) is Classification.OBJECT
    assert infer_from_opcode(K.DO_FCALL) is Classification.UNKNOWN
