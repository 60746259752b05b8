"""Executable checks for the metatheory of the marked semantics.

Each check runs the evaluator and answers a yes/no question; none of them
raises for an ordinary program fault.
"""
import logging
from typing import Iterable, List, Optional

from ..syntax import Expr, Hole, erase, forget_labels, has_holes, markers_of, unmark
from .evaluator import (
    DEFAULT_FUEL,
    Evaluator,
    Path,
    Stepped,
    Stuck,
    Trace,
    Value,
    applicable_rules,
    iter_positions,
    plug,
    step,
    subterm_at,
)

logger = logging.getLogger(__name__)


def _collapse(exprs: Iterable[Expr]) -> List[Expr]:
    """Drop consecutive duplicates."""
    out: List[Expr] = []
    for e in exprs:
        if not out or out[-1] != e:
            out.append(e)
    return out


def check_simulation(e_marked: Expr, fuel: int = DEFAULT_FUEL) -> bool:
    """Whether the marked run of ``e`` simulates the run of ``unmark(e)``.

    Marker propagation and lifts leave the unmarked image unchanged, so the
    images of the marked trace, with repeats collapsed, must be exactly the
    unmarked trace. Labels are ignored. When either run exhausts its fuel
    only the common prefix is compared.
    """
    plain = Evaluator(fuel).run(unmark(e_marked))
    marked = Evaluator(fuel * 4).run(e_marked)
    plain_images = _collapse(forget_labels(x) for x in plain.expressions())
    marked_images = _collapse(forget_labels(unmark(x)) for x in marked.expressions())
    finished = isinstance(plain.final, (Value, Stuck)) and isinstance(
        marked.final, (Value, Stuck)
    )
    if not finished:
        shortest = min(len(plain_images), len(marked_images))
        agrees = plain_images[:shortest] == marked_images[:shortest]
    else:
        agrees = plain_images == marked_images and type(plain.final) is type(
            marked.final
        )
    if not agrees:
        logger.debug(f"Simulation mismatch on {len(plain_images)} unmarked steps")
    return agrees


def check_determinism(e: Expr, m: int = 0) -> bool:
    """Exactly one rule fires anywhere the context grammar allows, unless ``e`` is final.

    A value or stuck expression must admit no rule at all; otherwise the
    single applicable rule must be the one :func:`step` takes.
    """
    firing = [
        (path, rule)
        for path, node, stage in iter_positions(e, m)
        for rule, _ in applicable_rules(node, stage)
    ]
    outcome = step(e, m)
    if not isinstance(outcome, Stepped):
        return not firing
    return len(firing) == 1 and firing[0][1] is outcome.rule


def check_step_stability(trace: Trace, keep: Iterable[str]) -> bool:
    """Replay ``trace`` under erasure.

    Each erased step either leaves the erased expression unchanged or takes
    exactly one step to the erased successor.
    """
    allowed = frozenset(keep)
    previous = trace.initial
    for entry in trace.steps:
        before = erase(previous, allowed)
        after = erase(entry.expr, allowed)
        if forget_labels(before) != forget_labels(after):
            outcome = step(before, 0)
            if not isinstance(outcome, Stepped):
                logger.debug(f"Erased image is final before {entry.rule.value}")
                return False
            if forget_labels(outcome.next) != forget_labels(after):
                logger.debug(f"Erased image diverges at {entry.rule.value}")
                return False
        previous = entry.expr
    return True


def check_stability(e: Expr, fuel: int = DEFAULT_FUEL) -> Optional[bool]:
    """Erasing every marker absent from the result does not change the result.

    Returns ``None`` when ``e`` itself does not reach a value within ``fuel``.
    """
    original = Evaluator(fuel).run(e)
    result = original.result
    if result is None:
        return None
    erased = Evaluator(fuel).run(erase(e, markers_of(result)))
    return erased.result == result


def check_monotonicity(
    e: Expr, positions: Iterable[Path], fuel: int = DEFAULT_FUEL
) -> Optional[bool]:
    """Holes only ever make a program less defined.

    ``positions`` are subterm paths of ``e`` to replace with holes. If the
    resulting prefix reaches a hole-free value, ``e`` must reach the same
    value. Returns ``None`` when the prefix does not reach one.
    """
    prefix = e
    applied: List[Path] = []
    for path in sorted(set(positions), key=len):
        if any(path[: len(done)] == done for done in applied):
            continue
        prefix = plug(prefix, path, Hole(subterm_at(prefix, path).label))
        applied.append(path)
    smaller = Evaluator(fuel).run(prefix)
    if smaller.result is None or has_holes(smaller.result):
        return None
    larger = Evaluator(fuel).run(e)
    return larger.result == smaller.result


def check_trace_determinism(trace: Trace) -> bool:
    """:func:`check_determinism` on every expression of ``trace``."""
    return all(check_determinism(x, 0) for x in trace.expressions())


def check_stage_monotonicity(value: Expr, m: int = 0) -> bool:
    """A value admits no rule at its own stage."""
    return not any(
        applicable_rules(node, stage) for _, node, stage in iter_positions(value, m)
    )
