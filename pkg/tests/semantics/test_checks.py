import pytest

from slamjs.harness.corpus import CORPUS
from slamjs.parser import parse
from slamjs.semantics import (
    Evaluator,
    check_determinism,
    check_monotonicity,
    check_simulation,
    check_stability,
    check_step_stability,
)
from slamjs.semantics.checks import check_stage_monotonicity, check_trace_determinism
from slamjs.syntax import markers_of

MARKED_PROGRAMS = [
    "if ((H : true)) { (L : false) } else { (I : 1) }",
    "((fun(x){ (I : fun(y){ x }) })((H : 1)))((L : 2))",
    '{"__proto__": null, "a": (H : 1)}[(L : "a")]',
    "run (H : box ((L : 1) - 2))",
    "let c = (H : box x) in let x = (L : 7) in run c",
]


@pytest.mark.parametrize("source", MARKED_PROGRAMS)
def test_simulation(source):
    assert check_simulation(parse(source))


@pytest.mark.parametrize("case", CORPUS, ids=lambda c: c.id)
def test_simulation_on_corpus(case):
    assert check_simulation(case.program(), fuel=20_000)


@pytest.mark.parametrize("source", MARKED_PROGRAMS)
def test_stability(source):
    assert check_stability(parse(source)) is True


@pytest.mark.parametrize("source", MARKED_PROGRAMS)
def test_step_stability(source):
    e = parse(source)
    trace = Evaluator().run(e)
    assert check_step_stability(trace, markers_of(trace.result))
    assert check_step_stability(trace, set())


def test_stability_undetermined_without_value():
    assert check_stability(parse("true(1)")) is None


@pytest.mark.parametrize("source", MARKED_PROGRAMS + ["true(1)", "1"])
def test_determinism_along_traces(source):
    trace = Evaluator().run(parse(source))
    assert check_trace_determinism(trace)


def test_determinism_of_stuck_expression():
    assert check_determinism(parse("x"))


def test_values_admit_no_rule():
    result = Evaluator().run(parse("box (fun(x){ x })(1)")).result
    assert check_stage_monotonicity(result)


def test_monotonicity_with_unused_branch():
    e = parse("if (true) { 1 } else { 2 }")
    # else branch replaced by a hole
    assert check_monotonicity(e, [(2,)]) is True


def test_monotonicity_undetermined_when_hole_is_demanded():
    e = parse("if (true) { 1 } else { 2 }")
    assert check_monotonicity(e, [(1,)]) is None
