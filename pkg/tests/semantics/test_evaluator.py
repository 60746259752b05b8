import json
import logging

import pytest

from slamjs.parser import parse, pretty
from slamjs.semantics import (
    Decomposition,
    Evaluator,
    FuelExhausted,
    Rule,
    Stepped,
    Stuck,
    StuckReason,
    Value,
    decompose,
    eval_full,
    step,
)
from slamjs.semantics.evaluator import ALREADY_VALUE, initial_configuration
from slamjs.syntax import Box, Const, Hole, Marked, Unbox, forget_labels, iter_nodes, unmark


def evaluate(source: str, fuel: int = 10_000, intermediate: bool = False):
    return Evaluator(fuel).run(parse(source, allow_intermediate=intermediate))


def value_of(source: str, **kwargs) -> str:
    result = evaluate(source, **kwargs).result
    assert result is not None, f"{source} did not reach a value"
    return pretty(result)


# --- Traces of the worked examples ---

def test_simple_if_trace():
    trace = evaluate("if (true) { false } else { 1 }")
    assert trace.rules() == ["Env-If", "Env-Const", "IfTrue", "Env-Const"]
    assert pretty(trace.result) == "false"


def test_marked_if_trace():
    trace = evaluate("if ((H : true)) { (L : false) } else { (I : 1) }")
    assert trace.rules() == [
        "Env-If",
        "Env-Marker",
        "Env-Const",
        "Lift-If",
        "IfTrue",
        "Env-Marker",
        "Env-Const",
    ]
    assert pretty(trace.result) == "(H : (L : false))"


def test_marked_and_unmarked_traces_agree_after_unmarking():
    marked = evaluate("if ((H : true)) { (L : false) } else { (I : 1) }")
    plain = evaluate("if (true) { false } else { 1 }")
    assert forget_labels(unmark(marked.result)) == forget_labels(plain.result)


@pytest.mark.parametrize(
    "source, expected",
    [
        ("run (box (if (unbox (box true)) { false } else { 1 }))", "false"),
        ("((fun(x){ fun(y){ run x } })(box y))(true)", "true"),
        ("((fun(x){ (I : fun(y){ x }) })((H : 1)))((L : 2))", "(I : (H : 1))"),
    ],
)
def test_staged_examples(source, expected):
    assert value_of(source) == expected


def test_code_captures_binding_at_run_site():
    assert value_of("let c = box x in let x = 7 in run c") == "7"


def test_unbox_splices_code():
    assert value_of("let a = box 1 in run (box (unbox a - 3))") == "-2"


# --- Records and primitives ---

def test_read_follows_prototype_chain():
    src = '{"__proto__": {"__proto__": null, "a": 1}, "b": 2}["a"]'
    assert value_of(src) == "1"


def test_read_missing_field_is_undef():
    assert value_of('{"__proto__": null}["zz"]') == "undef"


def test_write_updates_or_extends():
    assert value_of('({"__proto__": null, "a": 1}["a"] = 5)["a"]') == "5"
    assert value_of('({"__proto__": null}["c"] = 5)["c"]') == "5"


def test_delete_removes_field_and_ignores_missing():
    assert value_of('(del {"__proto__": null, "a": 1}["a"])["a"]') == "undef"
    assert value_of('del {"__proto__": null}["a"]') == '{"__proto__": null}'


@pytest.mark.parametrize(
    "source, expected",
    [
        ("3 - 1", "2"),
        ("1 == 1", "true"),
        ('"a" == "b"', "false"),
        ("{} == {}", "false"),
        ("typeof fun(x){ x }", '"function"'),
        ("typeof {}", '"object"'),
        ("typeof undef", '"undefined"'),
        ("typeof box 1", '"box"'),
    ],
)
def test_primitives(source, expected):
    assert value_of(source) == expected


# --- Lifts and holes ---

def test_lift_through_application():
    assert value_of("(H : fun(x){ x })(1)") == "(H : 1)"


def test_lift_through_read_selector():
    assert value_of('{"__proto__": null, "a": 1}[(H : "a")]') == "(H : 1)"


def test_lift_through_primitive_operands():
    assert value_of("(H : 3) - (L : 1)") == "(H : (L : 2))"


def test_hole_absorbs_branch():
    result = evaluate("if (_) { 1 } else { 2 }", intermediate=True).result
    assert isinstance(result, Hole)


def test_hole_is_a_value_inside_records():
    assert value_of('{"__proto__": null, "a": _}["b"]', intermediate=True) == "undef"


# --- Stuck states and fuel ---

@pytest.mark.parametrize(
    "source, reason",
    [
        ("true(1)", StuckReason.APPLY_NON_FUNCTION),
        ("x", StuckReason.UNBOUND_VARIABLE),
        ("if (1) { 2 } else { 3 }", StuckReason.BRANCH_NON_BOOLEAN),
        ("unbox (box 1)", StuckReason.UNBOX_OUTSIDE_BOX),
        ("run 1", StuckReason.RUN_NON_BOX),
        ('1["a"]', StuckReason.READ_NON_RECORD),
        ('{"__proto__": null}[1]', StuckReason.SELECTOR_NON_STRING),
        ('{"a": 1}["b"]', StuckReason.MISSING_PROTO_FIELD),
        ("1 - true", StuckReason.PRIM_TYPE_ERROR),
        ("run (box (unbox 1))", StuckReason.UNBOX_NON_BOX),
    ],
)
def test_stuck_reasons(source, reason):
    final = evaluate(source).final
    assert isinstance(final, Stuck)
    assert final.reason is reason


def test_hole_in_prototype_slot_is_demanded():
    final = evaluate('{"__proto__": _}["a"]', intermediate=True).final
    assert isinstance(final, Stuck)
    assert final.reason is StuckReason.HOLE_DEMANDED


def test_divergence_exhausts_fuel(caplog):
    omega = "(fun(x){ x(x) })(fun(x){ x(x) })"
    with caplog.at_level(logging.WARNING, logger="slamjs.semantics.evaluator"):
        trace = evaluate(omega, fuel=10)
    assert isinstance(trace.final, FuelExhausted)
    assert trace.final.steps == 10
    assert "Fuel exhausted" in caplog.text


def test_fuel_must_be_positive():
    with pytest.raises(ValueError):
        Evaluator(0)


# --- Decomposition and single steps ---

def test_decompose_finds_condition_of_simple_if():
    after_env = step(initial_configuration(parse("if (true) { false } else { 1 }")))
    assert isinstance(after_env, Stepped) and after_env.rule is Rule.ENV_IF
    found = decompose(after_env.next, 0)
    assert isinstance(found, Decomposition)
    assert found.path == (0,)
    assert found.stage == 0


def test_decompose_finds_unbox_at_stage_one():
    found = decompose(Box(Unbox(Box(Const.boolean(True)))), 0)
    assert isinstance(found, Decomposition)
    assert isinstance(found.redex, Unbox)
    assert found.stage == 1


def test_decompose_value():
    assert decompose(Marked("H", Const.num(1)), 0) is ALREADY_VALUE
    assert isinstance(step(Const.num(1), 0), Value)


def test_eval_full_matches_evaluator():
    e = parse("let f = fun(x){ x - 1 } in f(3)")
    assert eval_full(e).result == Evaluator().run(e).result


def test_labels_are_never_minted():
    e = parse("let f = fun(x){ (H : x) } in f(f(1))")
    program_labels = {n.label for n in iter_nodes(e)}
    trace = Evaluator().run(e)
    for expr in trace.expressions():
        assert {n.label for n in iter_nodes(expr)} <= program_labels


def test_trace_json_lines():
    trace = evaluate("if (true) { false } else { 1 }")
    lines = [json.loads(line) for line in trace.to_json_lines()]
    assert [line["step"] for line in lines] == [1, 2, 3, 4]
    assert lines[2] == {"step": 3, "stage": 0, "rule": "IfTrue", "expr": "(false, {})"}
