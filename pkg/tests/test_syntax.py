import pytest

from slamjs.parser import parse
from slamjs.syntax import (
    App,
    Box,
    Closure,
    Const,
    Env,
    Fun,
    Hole,
    Marked,
    Record,
    Unbox,
    Var,
    erase,
    forget_labels,
    is_marker_constant_value,
    is_prefix,
    is_value,
    iter_nodes,
    markers_of,
    number_labels,
    strip_markers_shallow,
    unmark,
)


# --- Labelling ---

def test_number_labels_is_post_order():
    """Children are numbered before their parent, left to right."""
    e = number_labels(App(Fun("x", Var("x")), Marked("H", Const.num(1))))
    assert [n.label for n in iter_nodes(e)] == list(range(5))
    assert e.label == 4
    assert e.arg.body.label == 2
    assert e.arg.label == 3


def test_parse_labels_are_unique_and_dense():
    e = parse("if ((H : true)) { (L : false) } else { 1 }")
    labels = [n.label for n in iter_nodes(e)]
    assert sorted(labels) == list(range(len(labels)))


def test_forget_labels_makes_programs_comparable():
    a = number_labels(Marked("H", Const.num(1)))
    b = number_labels(Marked("H", Const.num(1)), start=10)
    assert a != b
    assert forget_labels(a) == forget_labels(b)


# --- Markers ---

def test_markers_of_collects_every_marker():
    e = parse('{"__proto__": null, "a": (H : 1), "b": (L : (I : true))}')
    assert markers_of(e) == {"H", "L", "I"}


def test_unmark_strips_markers_and_keeps_inner_labels():
    e = parse("(H : (L : 1))")
    stripped = unmark(e)
    assert isinstance(stripped, Const)
    assert stripped.label == 0
    assert markers_of(stripped) == frozenset()


def test_erase_replaces_dropped_markers_with_holes():
    e = parse("if ((H : true)) { (L : false) } else { 1 }")
    erased = erase(e, {"L"})
    assert isinstance(erased.cond, Hole)
    assert erased.cond.label == e.cond.label
    assert erased.then == e.then


def test_erase_keeping_everything_is_identity():
    e = parse("(H : fun(x){ (L : x) })")
    assert erase(e, {"H", "L"}) == e


def test_strip_markers_shallow_reports_outermost_first():
    markers, core = strip_markers_shallow(parse("(I : (H : 1))"))
    assert markers == ("I", "H")
    assert core == Const.num(1, core.label)


def test_is_marker_constant_value():
    assert is_marker_constant_value(parse("(I : (H : 1))"))
    assert is_marker_constant_value(parse("true"))
    assert not is_marker_constant_value(parse("(H : {})"))


# --- Prefix order ---

def test_hole_is_a_prefix_of_anything():
    assert is_prefix(Hole(), parse("fun(x){ x }"))


def test_prefix_ignores_labels():
    smaller = App(Hole(7), Const.num(1, 3), 9)
    larger = parse("f(1)")
    assert is_prefix(smaller, larger)
    assert not is_prefix(larger, smaller)


def test_prefix_requires_same_shape():
    assert not is_prefix(parse("f(1)"), parse("f(2)"))
    assert not is_prefix(parse('{"a": 1}'), parse('{"b": 1}'))
    assert not is_prefix(parse("(H : 1)"), parse("(L : 1)"))


def test_prefix_compares_environments():
    env = Env().extend("x", Const.num(1))
    holed = Env().extend("x", Hole())
    assert is_prefix(Closure(Var("y"), holed), Closure(Var("y"), env))
    assert not is_prefix(Closure(Var("y"), env), Closure(Var("y"), Env()))


# --- Values and environments ---

@pytest.mark.parametrize(
    "expr, stage, expected",
    [
        (Const.num(1), 0, True),
        (Var("x"), 0, False),
        (Var("x"), 1, True),
        (Box(Var("x")), 0, True),
        (Box(App(Var("f"), Var("x"))), 0, True),
        (Box(Unbox(Var("c"))), 0, False),
        (Unbox(Var("c")), 2, True),
        (Fun("x", Var("x")), 0, False),
        (Closure(Fun("x", Var("x")), Env()), 0, True),
        (Marked("H", Hole()), 0, True),
        (Record((("a", App(Var("f"), Var("x"))),)), 0, False),
    ],
)
def test_is_value_by_stage(expr, stage, expected):
    assert is_value(expr, stage) is expected


def test_env_extend_replaces_and_sorts():
    env = Env().extend("y", Const.num(1)).extend("x", Const.num(2)).extend("y", Const.num(3))
    assert env.names() == ("x", "y")
    assert env.lookup("y") == Const.num(3)
    assert env.lookup("z") is None
    assert len(env) == 2


def test_record_rejects_duplicate_fields():
    with pytest.raises(ValueError, match="duplicate"):
        Record((("a", Const.num(1)), ("a", Const.num(2))))


def test_record_get():
    r = parse('{"__proto__": null, "a": 1}')
    assert r.get("a") == Const.num(1, r.get("a").label)
    assert r.get("b") is None
