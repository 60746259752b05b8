import pytest

from slamjs.analysis import Variant
from slamjs.harness import CORPUS, CorpusError, CorpusRunner, get_case
from slamjs.harness.corpus import CaseOutcome, CorpusCase, CorpusSummary


@pytest.fixture(scope="module")
def summary():
    return CorpusRunner(fuel=20_000).run(variants=list(Variant))


def test_every_case_passes_in_both_variants(summary):
    assert summary.passed, summary.format_table()
    assert len(summary.outcomes) == 2 * len(CORPUS)


def test_case_ids_are_unique():
    ids = [case.id for case in CORPUS]
    assert len(ids) == len(set(ids))


def test_unknown_case_is_reported():
    with pytest.raises(CorpusError, match="no corpus case 'ex99'"):
        get_case("ex99")


def test_improved_falls_back_to_simple_expectation():
    case = get_case("ex1")
    assert case.expected_depends(Variant.IMPROVED) == case.depends
    assert get_case("ex4").expected_depends(Variant.IMPROVED) == {"L"}


def test_case_programs_are_labelled():
    assert get_case("ex3").program().label > 0


def test_table_ends_with_tally(summary):
    lines = summary.format_table().splitlines()
    assert lines[0].split() == ["case", "variant", "depends", "expected", "value", "status"]
    assert lines[-1] == f"{len(summary.outcomes)}/{len(summary.outcomes)} passed"


def test_summary_dict_lists_outcomes(summary):
    data = summary.to_dict()
    assert data["passed"] is True
    first = data["outcomes"][0]
    assert first["case"] == "ex1"
    assert first["variant"] == "simple"
    assert first["depends"] == ["H", "L"]
    assert first["result"] == "(H : (L : false))"


def test_wrong_expectation_fails():
    case = CorpusCase(id="bad", title="Wrong", source="(H : 1)", depends=frozenset({"L"}))
    outcome = CorpusRunner().run_case(case, Variant.SIMPLE)
    assert outcome.depends_ok is False
    assert not outcome.passed


def test_wrong_value_fails():
    case = CorpusCase(id="bad", title="Wrong", source="1 - 1", value="1")
    assert CorpusRunner().run_case(case, Variant.SIMPLE).value_ok is False


def test_stuck_program_fails_value_check():
    case = CorpusCase(id="stuck", title="Stuck", source="true(1)", value="1")
    outcome = CorpusRunner().run_case(case, Variant.SIMPLE)
    assert outcome.result is None
    assert outcome.value_ok is False


def test_failures_are_listed_and_logged(caplog):
    outcome = CaseOutcome("bad", Variant.SIMPLE, frozenset({"H"}), frozenset(), None, None)
    summary = CorpusSummary([outcome])
    assert summary.failures == [outcome]
    assert "FAIL" in summary.format_table()
    bad = CorpusCase(id="bad", title="Wrong", source="(H : 1)", depends=frozenset())
    CorpusRunner().run([bad])
    assert "1 corpus checks failed" in caplog.text


def test_thread_pool_keeps_order():
    cases = [get_case("ex1"), get_case("ex9"), get_case("sem3")]
    serial = CorpusRunner(workers=1).run(cases, list(Variant))
    pooled = CorpusRunner(workers=2).run(cases, list(Variant))
    assert [o.to_dict() for o in pooled.outcomes] == [o.to_dict() for o in serial.outcomes]
