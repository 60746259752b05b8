"""Randomised checking of the semantic and analysis properties.

Programs come from :func:`slamjs.harness.generators.programs`. A failing
program is shrunk by hypothesis before it is reported.
"""
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from hypothesis import HealthCheck, given, seed, settings

from ..analysis import (
    FlowAnalysis,
    Variant,
    check_if_soundness,
    check_result_soundness,
    solve,
)
from ..parser import pretty
from ..semantics import (
    Evaluator,
    check_simulation,
    check_stability,
    check_step_stability,
)
from ..syntax import Expr, markers_of
from .generators import programs

logger = logging.getLogger(__name__)

PROPERTIES = (
    "simulation",
    "stability",
    "step-stability",
    "if-soundness",
    "cfa-soundness",
)


@dataclass(frozen=True)
class PropertyFailure:
    prop: str
    program: str

    def format(self) -> str:
        return f"{self.prop} fails on: {self.program}"


@dataclass
class PropertyReport:
    cases: int
    seed: int
    checked: Counter = field(default_factory=Counter)
    skipped: Counter = field(default_factory=Counter)
    failure: Optional[PropertyFailure] = None

    @property
    def passed(self) -> bool:
        return self.failure is None

    def format(self) -> str:
        lines = [f"seed {self.seed}, {self.cases} cases"]
        for prop in PROPERTIES:
            lines.append(
                f"  {prop}: {self.checked[prop]} checked, {self.skipped[prop]} skipped"
            )
        if self.failure is not None:
            lines.append(self.failure.format())
        else:
            lines.append("all properties hold")
        return "\n".join(lines)

    def to_dict(self) -> Dict[str, object]:
        return {
            "seed": self.seed,
            "cases": self.cases,
            "passed": self.passed,
            "checked": {p: self.checked[p] for p in PROPERTIES},
            "skipped": {p: self.skipped[p] for p in PROPERTIES},
            "failure": None
            if self.failure is None
            else {"property": self.failure.prop, "program": self.failure.program},
        }


class PropertyRunner:
    """Checks every property on generated programs.

    Args:
        cases: Number of programs to generate.
        seed: Seed for the hypothesis engine.
        max_depth: Depth bound handed to the generator.
        extra_stages: How many stages of ``box`` nesting to allow.
        fuel: Step budget for each evaluation.
    """

    def __init__(
        self,
        cases: int = 500,
        seed: int = 0,
        max_depth: int = 4,
        extra_stages: int = 2,
        fuel: int = 2000,
    ):
        self.cases = cases
        self.seed = seed
        self.max_depth = max_depth
        self.extra_stages = extra_stages
        self.fuel = fuel
        self.logger = logging.getLogger(__name__)

    def check_program(
        self, program: Expr, report: Optional[PropertyReport] = None
    ) -> List[str]:
        """Names of the properties ``program`` violates."""
        checked: Counter = report.checked if report is not None else Counter()
        skipped: Counter = report.skipped if report is not None else Counter()
        failed: List[str] = []

        def record(prop: str, outcome: Optional[bool]) -> None:
            if outcome is None:
                skipped[prop] += 1
                return
            checked[prop] += 1
            if not outcome:
                failed.append(prop)

        trace = Evaluator(self.fuel).run(program)
        result = trace.result
        record("simulation", check_simulation(program, self.fuel))
        record("stability", check_stability(program, self.fuel))
        record(
            "step-stability",
            None if result is None else check_step_stability(trace, markers_of(result)),
        )
        for variant in Variant:
            solution = solve(program, variant)
            flows = FlowAnalysis(variant).report(solution)
            record("if-soundness", check_if_soundness(program, variant, self.fuel, flows))
            record(
                "cfa-soundness",
                None if result is None else check_result_soundness(solution, result),
            )
        return failed

    def run(self) -> PropertyReport:
        report = PropertyReport(self.cases, self.seed)
        failures: List[PropertyFailure] = []

        @seed(self.seed)
        @settings(
            max_examples=self.cases,
            deadline=None,
            database=None,
            suppress_health_check=list(HealthCheck),
        )
        @given(programs(max_depth=self.max_depth, extra_stages=self.extra_stages))
        def holds(program: Expr) -> None:
            failed = self.check_program(program, report)
            if failed:
                failures.append(PropertyFailure(failed[0], pretty(program)))
                raise AssertionError(f"{failed[0]} violated")

        try:
            holds()
        except AssertionError:
            # hypothesis replays the shrunk example last
            report.failure = failures[-1]
            self.logger.error(report.failure.format())
        else:
            self.logger.info(f"All properties hold on {self.cases} programs")
        return report
