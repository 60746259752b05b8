"""Reference programs with their known dependencies and results.

Cases ``ex1``..``ex11`` exercise the dependency analysis; ``sem1``..``sem5``
are small evaluation examples whose final values are known.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence

from ..analysis import Variant, analyze
from ..parser import SourceProgram, parse, pretty
from ..semantics import DEFAULT_FUEL, Evaluator
from ..syntax import Expr, forget_labels, unmark

logger = logging.getLogger(__name__)


class CorpusError(LookupError):
    """Unknown corpus case."""


@dataclass(frozen=True)
class CorpusCase:
    """One reference program.

    ``depends_improved`` is only set where the improved variant is more
    precise; otherwise it falls back to ``depends``. ``value`` is compared
    after stripping markers, ``marked_value`` exactly.
    """

    id: str
    title: str
    source: str
    depends: Optional[FrozenSet[str]] = None
    depends_improved: Optional[FrozenSet[str]] = None
    value: Optional[str] = None
    marked_value: Optional[str] = None
    citation: str = ""

    def program(self) -> Expr:
        return parse(SourceProgram(self.source, f"<corpus:{self.id}>"))

    def expected_depends(self, variant: Variant) -> Optional[FrozenSet[str]]:
        if variant is Variant.IMPROVED and self.depends_improved is not None:
            return self.depends_improved
        return self.depends


def _markers(*names: str) -> FrozenSet[str]:
    return frozenset(names)


CORPUS: Sequence[CorpusCase] = (
    CorpusCase(
        id="ex1",
        title="Branching on a marked condition",
        source='if ((H : true)) { (L : false) } else { 1 }',
        depends=_markers("H", "L"),
        value="false",
        citation="dependency examples, no. 1",
    ),
    CorpusCase(
        id="ex2",
        title="Church-encoded conditional",
        source="""
let ctrue = fun(x){ fun(y){ x } } in
let cif = fun(x){ fun(y){ fun(z){ (x(y))(z) } } } in
((cif((H : ctrue)))((L : false)))((I : 1))
""",
        depends=_markers("H", "I", "L"),
        depends_improved=_markers("H", "L"),
        value="false",
        citation="dependency examples, no. 2",
    ),
    CorpusCase(
        id="ex3",
        title="Choosing a function by code value",
        source="""
let x = if (true) { box f } else { box g } in
let f = fun(y){ 1 } in
let g = fun(z){ (L : true) } in
run (box ((unbox x)((H : undef))))
""",
        depends=_markers("L"),
        value="1",
        citation="dependency examples, no. 3",
    ),
    CorpusCase(
        id="ex4",
        title="Running code in another scope",
        source="""
let c = box x in
let x = (L : 1) in
let eval = fun(b){ run b } in
let x = (H : 2) in
eval(c)
""",
        depends=_markers("H", "L"),
        depends_improved=_markers("L"),
        value="1",
        citation="dependency examples, no. 4",
    ),
    CorpusCase(
        id="ex5",
        title="Field access through generated code",
        source="""
let i = (I : {"__proto__": null, "x": (H : 1), "y": (L : 2)}) in
let s = fun(id){ let f = box (i[unbox id]) in run f } in
s(box "y")
""",
        depends=_markers("H", "I", "L"),
        value="2",
        citation="dependency examples, no. 5",
    ),
    CorpusCase(
        id="ex6",
        title="Function or boxed function",
        source="""
let fst = fun(x){ fun(y){ x } } in
let f = if (false) { fst } else { box fst } in
let x = (H : 1) in
let y = (L : true) in
if (typeof f == "function") { (f(x))(y) }
else { run (box (((unbox f)(x))(y))) }
""",
        depends=_markers("H"),
        value="1",
        citation="dependency examples, no. 6",
    ),
    CorpusCase(
        id="ex7",
        title="Pairing across two stages",
        source="""
let pair = fun(x){ fun(y){ fun(z){ run z } } } in
let fst = fun(z){ z(box x) } in
let snd = fun(z){ z(box y) } in
let bp = box ((pair((L : (box (1)))))((H : (box (true))))) in
let boxfst = box ((fst)(unbox bp)) in
run (run (boxfst))
""",
        depends=_markers("H", "L"),
        depends_improved=_markers("L"),
        value="1",
        citation="dependency examples, no. 7",
    ),
    CorpusCase(
        id="ex8",
        title="Loop bounded by a marked input",
        source="""
(fun(n){
  (fun(x){ (x(x))(n) })
  (fun(x){ fun(y){ if (y == 0) { true } else { (x(x))(y - 1) } } })
})((H : 5))
""",
        depends=_markers("H"),
        value="true",
        citation="dependency examples, no. 8",
    ),
    CorpusCase(
        id="ex9",
        title="Splicing a variable into a template",
        source="""
let fst = fun(x){ fun(y){ x } } in
let a = box x in
let b = box (fun(x){ fun(y){ (fst(unbox a))(y) } }) in
((run b)((L : 1)))((H : 2))
""",
        depends=_markers("L"),
        value="1",
        citation="dependency examples, no. 9",
    ),
    CorpusCase(
        id="ex10",
        title="Unstaged template with a record environment",
        source="""
let fst = fun(x){ fun(y){ x } } in
let a = fun(p){ p["x"] } in
let b = (fun(h){ fun(p){ fun(x){ fun(y){
  (fst(h((p["x"] = x)["y"] = y)))(y)
} } } })(a) in
((b({"__proto__": null}))((L : 1)))((H : 2))
""",
        depends=_markers("H", "L"),
        value="1",
        citation="dependency examples, no. 10",
    ),
    CorpusCase(
        id="ex11",
        title="Unstaged template with a functional environment",
        source="""
let blank = fun(get){ (get(null))(null) } in
let getx = fun(x){ fun(y){ x } } in
let gety = fun(x){ fun(y){ y } } in
let setx = fun(env){ fun(newx){ fun(get){ (get(newx))(env(gety)) } } } in
let sety = fun(env){ fun(newy){ fun(get){ (get(env(getx)))(newy) } } } in
let fst = fun(x){ fun(y){ x } } in
let a = fun(p){ p(getx) } in
let b = (fun(h){ fun(p){ fun(x){ fun(y){
  (fst(h((sety((setx(p))(x)))(y))))(y)
} } } })(a) in
((b(blank))((L : 1)))((H : 2))
""",
        depends=_markers("H", "L"),
        depends_improved=_markers("L"),
        value="1",
        citation="dependency examples, no. 11",
    ),
    CorpusCase(
        id="sem1",
        title="Simple conditional",
        source="if (true) { false } else { 1 }",
        value="false",
        citation="evaluation examples, no. 1",
    ),
    CorpusCase(
        id="sem2",
        title="Splicing and running code",
        source="run (box (if (unbox (box true)) { false } else { 1 }))",
        value="false",
        citation="evaluation examples, no. 2",
    ),
    CorpusCase(
        id="sem3",
        title="Code capturing a later binding",
        source="((fun(x){ fun(y){ run x } })(box y))(true)",
        value="true",
        citation="evaluation examples, no. 3",
    ),
    CorpusCase(
        id="sem4",
        title="Marked conditional",
        source="if ((H : true)) { (L : false) } else { (I : 1) }",
        value="false",
        marked_value="(H : (L : false))",
        citation="evaluation examples, no. 4",
    ),
    CorpusCase(
        id="sem5",
        title="Marked function",
        source="((fun(x){ (I : fun(y){ x }) })((H : 1)))((L : 2))",
        depends=_markers("H", "I"),
        value="1",
        marked_value="(I : (H : 1))",
        citation="evaluation examples, no. 5",
    ),
)

_BY_ID: Dict[str, CorpusCase] = {case.id: case for case in CORPUS}


def get_case(case_id: str) -> CorpusCase:
    try:
        return _BY_ID[case_id]
    except KeyError as e:
        known = ", ".join(_BY_ID)
        raise CorpusError(f"no corpus case {case_id!r}; known cases: {known}") from e


@dataclass(frozen=True)
class CaseOutcome:
    """Result of running one case under one variant."""

    case_id: str
    variant: Variant
    depends: FrozenSet[str]
    expected_depends: Optional[FrozenSet[str]]
    result: Optional[str]
    value_ok: Optional[bool]

    @property
    def depends_ok(self) -> Optional[bool]:
        if self.expected_depends is None:
            return None
        return self.depends == self.expected_depends

    @property
    def passed(self) -> bool:
        return self.depends_ok is not False and self.value_ok is not False

    def to_dict(self) -> Dict[str, object]:
        return {
            "case": self.case_id,
            "variant": self.variant.value,
            "depends": sorted(self.depends),
            "expected": None
            if self.expected_depends is None
            else sorted(self.expected_depends),
            "result": self.result,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class CorpusSummary:
    outcomes: List[CaseOutcome]

    @property
    def passed(self) -> bool:
        return all(o.passed for o in self.outcomes)

    @property
    def failures(self) -> List[CaseOutcome]:
        return [o for o in self.outcomes if not o.passed]

    def format_table(self) -> str:
        """Human-readable table, one row per case and variant."""
        rows = [("case", "variant", "depends", "expected", "value", "status")]
        for o in self.outcomes:
            expected = "-" if o.expected_depends is None else _braces(o.expected_depends)
            rows.append(
                (
                    o.case_id,
                    o.variant.value,
                    _braces(o.depends),
                    expected,
                    o.result or "-",
                    "ok" if o.passed else "FAIL",
                )
            )
        widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
        passed = sum(o.passed for o in self.outcomes)
        lines.append(f"{passed}/{len(self.outcomes)} passed")
        return "\n".join(lines)

    def to_dict(self) -> Dict[str, object]:
        return {
            "passed": self.passed,
            "outcomes": [o.to_dict() for o in self.outcomes],
        }


def _braces(markers: Iterable[str]) -> str:
    return "{" + ", ".join(sorted(markers)) + "}"


def _same(actual: Expr, expected_src: str) -> bool:
    return forget_labels(actual) == forget_labels(parse(expected_src))


class CorpusRunner:
    """Evaluates and analyses corpus cases, optionally in a thread pool."""

    def __init__(self, fuel: int = DEFAULT_FUEL, workers: int = 1):
        self.fuel = fuel
        self.workers = max(1, workers)
        self.logger = logging.getLogger(__name__)

    def run_case(self, case: CorpusCase, variant: Variant) -> CaseOutcome:
        program = case.program()
        report = analyze(program, variant)
        result = Evaluator(self.fuel).run(program).result
        value_ok: Optional[bool] = None
        if case.value is not None or case.marked_value is not None:
            value_ok = result is not None
            if result is not None and case.value is not None:
                value_ok = _same(unmark(result), case.value)
            if result is not None and case.marked_value is not None:
                value_ok = value_ok and _same(result, case.marked_value)
        outcome = CaseOutcome(
            case.id,
            variant,
            report.depends,
            case.expected_depends(variant),
            pretty(result) if result is not None else None,
            value_ok,
        )
        verdict = "ok" if outcome.passed else "FAIL"
        self.logger.info(f"{case.id} ({variant.value}): {report.format()} {verdict}")
        return outcome

    def run(
        self,
        cases: Iterable[CorpusCase] = CORPUS,
        variants: Iterable[Variant] = (Variant.SIMPLE,),
    ) -> CorpusSummary:
        jobs = [(case, Variant(v)) for case in cases for v in variants]
        if self.workers == 1:
            outcomes = [self.run_case(case, variant) for case, variant in jobs]
        else:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                outcomes = list(pool.map(lambda job: self.run_case(*job), jobs))
        summary = CorpusSummary(outcomes)
        if not summary.passed:
            self.logger.warning(f"{len(summary.failures)} corpus checks failed")
        return summary
