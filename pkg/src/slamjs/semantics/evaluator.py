"""Stage-indexed small-step evaluator.

A step splits the expression into an evaluation context and a focus node,
then applies exactly one top-level rule at the focus:

* environment propagation pushes an explicit substitution ``(t, ρ)`` one
  level down (``Env-*``, plus ``Lookup`` at stage 0),
* proper reductions (``Apply``, ``Unbox``, ``Run``, ``IfTrue`` ...),
* lifts, which hoist a dependency marker out of an operand position whose
  value influences the result indirectly (``Lift-*``),
* hole absorption, which reduces a redex with a hole in a lift position to
  a hole (``Hole-*``).

Labels follow the labelled rules: no rule mints a new label.
"""
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Iterator, List, Optional, Tuple, Type, Union

from ..parser import pretty
from ..syntax import (
    EMPTY_ENV,
    PROTO,
    App,
    Box,
    Closure,
    Const,
    ConstKind,
    Delete,
    Expr,
    Fun,
    Hole,
    If,
    Marked,
    Prim,
    Read,
    Record,
    Run,
    RunIn,
    Unbox,
    Var,
    Write,
    close,
    is_value,
)
from .primitives import PrimitiveFault, eval_prim

logger = logging.getLogger(__name__)

DEFAULT_FUEL = 100_000

Path = Tuple[int, ...]


class Rule(str, Enum):
    """Names of the top-level reduction rules, as recorded in traces."""

    ENV_CONST = "Env-Const"
    ENV_RECORD = "Env-Record"
    ENV_VAR = "Env-Var"
    ENV_FUN = "Env-Fun"
    ENV_APP = "Env-App"
    ENV_BOX = "Env-Box"
    ENV_UNBOX = "Env-Unbox"
    ENV_RUN = "Env-Run"
    ENV_RUN_CODE = "Env-RunCode"
    ENV_IF = "Env-If"
    ENV_READ = "Env-Read"
    ENV_WRITE = "Env-Write"
    ENV_DEL = "Env-Del"
    ENV_PRIM = "Env-Prim"
    ENV_MARKER = "Env-Marker"
    ENV_HOLE = "Env-Hole"
    ENV_CLOSED = "Env-Closed"
    LOOKUP = "Lookup"
    APPLY = "Apply"
    UNBOX = "Unbox"
    RUN = "Run"
    IF_TRUE = "IfTrue"
    IF_FALSE = "IfFalse"
    READ1 = "Read1"
    READ2 = "Read2"
    READ3 = "Read3"
    WRITE1 = "Write1"
    WRITE2 = "Write2"
    DEL1 = "Del1"
    DEL2 = "Del2"
    PRIM = "Prim"
    LIFT_APP = "Lift-App"
    LIFT_IF = "Lift-If"
    LIFT_UNBOX = "Lift-Unbox"
    LIFT_RUN_IN = "Lift-RunIn"
    LIFT_READ_REC = "Lift-ReadRec"
    LIFT_READ_SEL = "Lift-ReadSel"
    LIFT_WRITE_REC = "Lift-WriteRec"
    LIFT_WRITE_SEL = "Lift-WriteSel"
    LIFT_DEL_REC = "Lift-DelRec"
    LIFT_DEL_SEL = "Lift-DelSel"
    LIFT_PRIM1 = "Lift-Prim1"
    LIFT_PRIM2 = "Lift-Prim2"
    HOLE_APP = "Hole-App"
    HOLE_IF = "Hole-If"
    HOLE_UNBOX = "Hole-Unbox"
    HOLE_RUN_IN = "Hole-RunIn"
    HOLE_READ_REC = "Hole-ReadRec"
    HOLE_READ_SEL = "Hole-ReadSel"
    HOLE_WRITE_REC = "Hole-WriteRec"
    HOLE_WRITE_SEL = "Hole-WriteSel"
    HOLE_DEL_REC = "Hole-DelRec"
    HOLE_DEL_SEL = "Hole-DelSel"
    HOLE_PRIM = "Hole-Prim"

    @property
    def is_lift(self) -> bool:
        return self.value.startswith("Lift-")

    @property
    def is_hole(self) -> bool:
        return self.value.startswith("Hole-")


class StuckReason(str, Enum):
    APPLY_NON_FUNCTION = "ApplyNonFunction"
    BRANCH_NON_BOOLEAN = "BranchNonBoolean"
    READ_NON_RECORD = "ReadNonRecord"
    SELECTOR_NON_STRING = "SelectorNonString"
    UNBOX_NON_BOX = "UnboxNonBox"
    UNBOX_OUTSIDE_BOX = "UnboxOutsideBox"
    RUN_NON_BOX = "RunNonBox"
    UNBOUND_VARIABLE = "UnboundVariable"
    HOLE_DEMANDED = "HoleDemanded"
    MISSING_PROTO_FIELD = "MissingProtoField"
    PRIM_TYPE_ERROR = "PrimTypeError"
    OPEN_TERM = "OpenTerm"


@dataclass(frozen=True)
class Stepped:
    next: Expr
    rule: Rule
    stage: int


@dataclass(frozen=True)
class Value:
    expr: Expr
    stage: int = 0


@dataclass(frozen=True)
class Stuck:
    reason: StuckReason
    focus: int
    detail: str = ""


@dataclass(frozen=True)
class FuelExhausted:
    expr: Expr
    steps: int


StepResult = Union[Stepped, Value, Stuck, FuelExhausted]


@dataclass(frozen=True)
class Decomposition:
    """``e = C⟨redex⟩`` with the hole of ``C`` at ``stage``; ``path`` indexes subterms."""

    path: Path
    redex: Expr
    stage: int


class AlreadyValue:
    def __repr__(self) -> str:
        return "AlreadyValue"


ALREADY_VALUE = AlreadyValue()


@dataclass(frozen=True)
class NoRedex:
    reason: StuckReason
    focus: int


@dataclass(frozen=True)
class TraceStep:
    expr: Expr
    rule: Rule
    stage: int


@dataclass
class Trace:
    """Every step from ``initial`` to the final outcome."""

    initial: Expr
    steps: List[TraceStep] = field(default_factory=list)
    final: Optional[StepResult] = None

    @property
    def result(self) -> Optional[Expr]:
        """The final value, or ``None`` if evaluation did not produce one."""
        if isinstance(self.final, Value):
            return self.final.expr
        return None

    def expressions(self) -> List[Expr]:
        return [self.initial] + [s.expr for s in self.steps]

    def rules(self) -> List[str]:
        return [s.rule.value for s in self.steps]

    def to_json_lines(self) -> Iterator[str]:
        for index, step in enumerate(self.steps, start=1):
            yield json.dumps(
                {
                    "step": index,
                    "stage": step.stage,
                    "rule": step.rule.value,
                    "expr": pretty(step.expr),
                },
                ensure_ascii=False,
            )


# Context navigation


def subterm_at(e: Expr, path: Path) -> Expr:
    for index in path:
        e = e.subterms()[index]
    return e


def plug(e: Expr, path: Path, new: Expr) -> Expr:
    """Replace the subterm of ``e`` at ``path`` with ``new``."""
    if not path:
        return new
    subs = list(e.subterms())
    subs[path[0]] = plug(subs[path[0]], path[1:], new)
    return e.with_subterms(tuple(subs))


def _focus(e: Expr, m: int, path: Path) -> Optional[Tuple[Path, Expr, int]]:
    """Follow the deterministic context grammar to the node to reduce."""
    if is_value(e, m):
        return None
    if isinstance(e, Marked):
        return _focus(e.body, m, path + (0,))
    if isinstance(e, Record):
        return _first_non_value(e.subterms(), m, path)
    if isinstance(e, Fun):
        if m == 0:
            return path, e, m
        return _focus(e.body, m, path + (0,))
    if isinstance(e, Box):
        return _focus(e.body, m + 1, path + (0,))
    if isinstance(e, Unbox):
        if m > 0 and not is_value(e.body, m - 1):
            return _focus(e.body, m - 1, path + (0,))
        return path, e, m
    if isinstance(e, (Run, RunIn)):
        if not is_value(e.body, m):
            return _focus(e.body, m, path + (0,))
        return path, e, m
    if isinstance(e, If):
        if not is_value(e.cond, m):
            return _focus(e.cond, m, path + (0,))
        if m > 0:
            return _first_non_value(e.subterms(), m, path)
        return path, e, m
    if isinstance(e, (App, Read, Write, Delete, Prim)):
        inner = _first_non_value(e.subterms(), m, path)
        return inner if inner is not None else (path, e, m)
    return path, e, m


def _first_non_value(
    subs: Tuple[Expr, ...], m: int, path: Path
) -> Optional[Tuple[Path, Expr, int]]:
    for index, sub in enumerate(subs):
        if not is_value(sub, m):
            return _focus(sub, m, path + (index,))
    return None


def iter_positions(e: Expr, m: int = 0, path: Path = ()) -> Iterator[Tuple[Path, Expr, int]]:
    """Every ``(path, node, stage)`` the context grammar allows as a hole.

    Unlike :func:`decompose` this does not stop at the leftmost non-value;
    it only requires the values the grammar demands to the left.
    """
    yield path, e, m
    subs = e.subterms()
    if isinstance(e, (Closure, Var, Const, Hole)):
        return
    if isinstance(e, Fun):
        if m > 0:
            yield from iter_positions(e.body, m, path + (0,))
        return
    if isinstance(e, Box):
        yield from iter_positions(e.body, m + 1, path + (0,))
        return
    if isinstance(e, Unbox):
        if m > 0:
            yield from iter_positions(e.body, m - 1, path + (0,))
        return
    if isinstance(e, (Marked, Run, RunIn)):
        yield from iter_positions(subs[0], m, path + (0,))
        return
    if isinstance(e, If):
        yield from iter_positions(e.cond, m, path + (0,))
        if m > 0 and is_value(e.cond, m):
            yield from iter_positions(e.then, m, path + (1,))
            if is_value(e.then, m):
                yield from iter_positions(e.orelse, m, path + (2,))
        return
    for index, sub in enumerate(subs):
        yield from iter_positions(sub, m, path + (index,))
        if not is_value(sub, m):
            return


# Rules

Matcher = Callable[[Expr, int], Optional[Expr]]

_ENV_RULES: Dict[Type[Expr], Rule] = {
    Const: Rule.ENV_CONST,
    Record: Rule.ENV_RECORD,
    App: Rule.ENV_APP,
    Box: Rule.ENV_BOX,
    Unbox: Rule.ENV_UNBOX,
    If: Rule.ENV_IF,
    Read: Rule.ENV_READ,
    Write: Rule.ENV_WRITE,
    Delete: Rule.ENV_DEL,
    Prim: Rule.ENV_PRIM,
    Marked: Rule.ENV_MARKER,
    Hole: Rule.ENV_HOLE,
    Closure: Rule.ENV_CLOSED,
    RunIn: Rule.ENV_CLOSED,
}


def _propagate(c: Expr, n: int) -> Optional[Tuple[Expr, Rule]]:
    """Push the environment of closure ``c`` one level into its term."""
    if not isinstance(c, Closure):
        return None
    t, env, label = c.term, c.env, c.label
    if isinstance(t, Var):
        return (t, Rule.ENV_VAR) if n > 0 else None
    if isinstance(t, Fun):
        if n == 0:
            return None
        return Fun(t.param, close(t.body, env), label), Rule.ENV_FUN
    if isinstance(t, Run):
        if n == 0:
            return RunIn(close(t.body, env), env, label), Rule.ENV_RUN
        return Run(close(t.body, env), label), Rule.ENV_RUN_CODE
    if isinstance(t, (Closure, RunIn, Const, Hole)):
        return t, _ENV_RULES[type(t)]
    pushed = t.with_subterms(tuple(close(s, env) for s in t.subterms()))
    return pushed, _ENV_RULES[type(t)]


def _lookup(c: Expr, n: int) -> Optional[Expr]:
    if n == 0 and isinstance(c, Closure) and isinstance(c.term, Var):
        value = c.env.lookup(c.term.name)
        if value is not None:
            return value.relabel(c.label)
    return None


def _is_fun_closure(v: Expr) -> bool:
    return isinstance(v, Closure) and isinstance(v.term, Fun)


def _plain(v: Expr) -> bool:
    """A value that neither lifts nor absorbs: not marked, not a hole."""
    return not isinstance(v, (Marked, Hole))


def _string_selector(v: Expr) -> Optional[str]:
    if isinstance(v, Const) and v.kind is ConstKind.STR:
        return v.value  # type: ignore[return-value]
    return None


def _lift(e: Expr, index: int, n: int, stage: int = 0) -> Optional[Expr]:
    """Hoist the marker at operand ``index`` above ``e``, if the redex is ready."""
    if n != stage:
        return None
    subs = e.subterms()
    operand = subs[index]
    if not isinstance(operand, Marked):
        return None
    rebuilt = list(subs)
    rebuilt[index] = operand.body
    inner = e.with_subterms(tuple(rebuilt))
    return Marked(operand.marker, inner, e.label)


def _absorb(e: Expr, index: int, n: int, stage: int = 0) -> Optional[Expr]:
    if n != stage:
        return None
    if isinstance(e.subterms()[index], Hole):
        return Hole(e.label)
    return None


def _operands_ready(e: Expr, upto: int, n: int) -> bool:
    """Operands before ``upto`` are plain stage-``n`` values; the rest are values."""
    subs = e.subterms()
    if not all(is_value(s, n) for s in subs):
        return False
    return all(_plain(s) for s in subs[:upto])


def _apply(e: Expr, n: int) -> Optional[Expr]:
    assert isinstance(e, App)
    if n == 0 and _is_fun_closure(e.fn) and is_value(e.arg, 0):
        fn = e.fn
        assert isinstance(fn, Closure) and isinstance(fn.term, Fun)
        return close(fn.term.body, fn.env.extend(fn.term.param, e.arg))
    return None


def _operand_rule(index: int, kind: str) -> Matcher:
    def matcher(e: Expr, n: int) -> Optional[Expr]:
        if not _operands_ready(e, index, n):
            return None
        if kind == "lift":
            return _lift(e, index, n)
        return _absorb(e, index, n)

    return matcher


def _unbox(e: Expr, n: int) -> Optional[Expr]:
    assert isinstance(e, Unbox)
    if n == 1 and isinstance(e.body, Box) and is_value(e.body, 0):
        return e.body.body.relabel(e.label)
    return None


def _unbox_operand(kind: str) -> Matcher:
    def matcher(e: Expr, n: int) -> Optional[Expr]:
        if not is_value(e.subterms()[0], 0):
            return None
        if kind == "lift":
            return _lift(e, 0, n, stage=1)
        return _absorb(e, 0, n, stage=1)

    return matcher


def _run(e: Expr, n: int) -> Optional[Expr]:
    assert isinstance(e, RunIn)
    if n == 0 and isinstance(e.body, Box) and is_value(e.body, 0):
        code = e.body.body.relabel(e.label)
        return Closure(code, e.env, e.label)
    return None


def _run_operand(kind: str) -> Matcher:
    def matcher(e: Expr, n: int) -> Optional[Expr]:
        assert isinstance(e, RunIn)
        if n != 0 or not is_value(e.body, 0):
            return None
        if kind == "lift" and isinstance(e.body, Marked):
            return Marked(e.body.marker, RunIn(e.body.body, e.env, e.label), e.label)
        if kind == "hole" and isinstance(e.body, Hole):
            return Hole(e.label)
        return None

    return matcher


def _branch(truth: bool) -> Matcher:
    def matcher(e: Expr, n: int) -> Optional[Expr]:
        assert isinstance(e, If)
        cond = e.cond
        if (
            n == 0
            and isinstance(cond, Const)
            and cond.kind is ConstKind.BOOL
            and cond.value is truth
        ):
            return e.then if truth else e.orelse
        return None

    return matcher


def _if_cond(kind: str) -> Matcher:
    def matcher(e: Expr, n: int) -> Optional[Expr]:
        assert isinstance(e, If)
        if not is_value(e.cond, 0):
            return None
        if kind == "lift":
            return _lift(e, 0, n)
        return _absorb(e, 0, n)

    return matcher


def _record_access(e: Expr, n: int) -> Optional[Tuple[Record, str]]:
    """Record and selector of a ready field access, or ``None``."""
    if n != 0 or not all(is_value(s, 0) for s in e.subterms()):
        return None
    target, selector = e.subterms()[0], e.subterms()[1]
    name = _string_selector(selector)
    if not isinstance(target, Record) or name is None:
        return None
    return target, name


def _read1(e: Expr, n: int) -> Optional[Expr]:
    access = _record_access(e, n)
    if access is None:
        return None
    record, name = access
    found = record.get(name)
    return found.relabel(e.label) if found is not None else None


def _read2(e: Expr, n: int) -> Optional[Expr]:
    access = _record_access(e, n)
    if access is None:
        return None
    record, name = access
    proto = record.get(PROTO)
    if record.get(name) is None and isinstance(proto, Record):
        assert isinstance(e, Read)
        return Read(proto, e.selector, e.label)
    return None


def _read3(e: Expr, n: int) -> Optional[Expr]:
    access = _record_access(e, n)
    if access is None:
        return None
    record, name = access
    proto = record.get(PROTO)
    if (
        record.get(name) is None
        and isinstance(proto, Const)
        and proto.kind is ConstKind.NULL
    ):
        return Const.undef(e.label)
    return None


def _write(present: bool) -> Matcher:
    def matcher(e: Expr, n: int) -> Optional[Expr]:
        access = _record_access(e, n)
        if access is None:
            return None
        record, name = access
        assert isinstance(e, Write)
        if (record.get(name) is not None) != present:
            return None
        if present:
            fields = tuple(
                (f, e.value if f == name else v) for f, v in record.fields
            )
        else:
            fields = record.fields + ((name, e.value),)
        return Record(fields, e.label)

    return matcher


def _delete(present: bool) -> Matcher:
    def matcher(e: Expr, n: int) -> Optional[Expr]:
        access = _record_access(e, n)
        if access is None:
            return None
        record, name = access
        if (record.get(name) is not None) != present:
            return None
        fields = tuple((f, v) for f, v in record.fields if f != name)
        return Record(fields, e.label)

    return matcher


def _prim(e: Expr, n: int) -> Optional[Expr]:
    assert isinstance(e, Prim)
    if n != 0 or not _operands_ready(e, len(e.subterms()), 0):
        return None
    try:
        return eval_prim(e.op, e.left, e.right).relabel(e.label)
    except PrimitiveFault:
        return None


def _prim_hole(e: Expr, n: int) -> Optional[Expr]:
    assert isinstance(e, Prim)
    for index in range(len(e.subterms())):
        result = _operand_rule(index, "hole")(e, n)
        if result is not None:
            return result
    return None


_PROPER_RULES: Dict[Type[Expr], List[Tuple[Rule, Matcher]]] = {
    App: [
        (Rule.APPLY, _apply),
        (Rule.LIFT_APP, _operand_rule(0, "lift")),
        (Rule.HOLE_APP, _operand_rule(0, "hole")),
    ],
    Unbox: [
        (Rule.UNBOX, _unbox),
        (Rule.LIFT_UNBOX, _unbox_operand("lift")),
        (Rule.HOLE_UNBOX, _unbox_operand("hole")),
    ],
    RunIn: [
        (Rule.RUN, _run),
        (Rule.LIFT_RUN_IN, _run_operand("lift")),
        (Rule.HOLE_RUN_IN, _run_operand("hole")),
    ],
    If: [
        (Rule.IF_TRUE, _branch(True)),
        (Rule.IF_FALSE, _branch(False)),
        (Rule.LIFT_IF, _if_cond("lift")),
        (Rule.HOLE_IF, _if_cond("hole")),
    ],
    Read: [
        (Rule.READ1, _read1),
        (Rule.READ2, _read2),
        (Rule.READ3, _read3),
        (Rule.LIFT_READ_REC, _operand_rule(0, "lift")),
        (Rule.HOLE_READ_REC, _operand_rule(0, "hole")),
        (Rule.LIFT_READ_SEL, _operand_rule(1, "lift")),
        (Rule.HOLE_READ_SEL, _operand_rule(1, "hole")),
    ],
    Write: [
        (Rule.WRITE1, _write(present=True)),
        (Rule.WRITE2, _write(present=False)),
        (Rule.LIFT_WRITE_REC, _operand_rule(0, "lift")),
        (Rule.HOLE_WRITE_REC, _operand_rule(0, "hole")),
        (Rule.LIFT_WRITE_SEL, _operand_rule(1, "lift")),
        (Rule.HOLE_WRITE_SEL, _operand_rule(1, "hole")),
    ],
    Delete: [
        (Rule.DEL1, _delete(present=True)),
        (Rule.DEL2, _delete(present=False)),
        (Rule.LIFT_DEL_REC, _operand_rule(0, "lift")),
        (Rule.HOLE_DEL_REC, _operand_rule(0, "hole")),
        (Rule.LIFT_DEL_SEL, _operand_rule(1, "lift")),
        (Rule.HOLE_DEL_SEL, _operand_rule(1, "hole")),
    ],
    Prim: [
        (Rule.PRIM, _prim),
        (Rule.LIFT_PRIM1, _operand_rule(0, "lift")),
        (Rule.LIFT_PRIM2, _operand_rule(1, "lift")),
        (Rule.HOLE_PRIM, _prim_hole),
    ],
}


def applicable_rules(e: Expr, n: int) -> List[Tuple[Rule, Expr]]:
    """Every top-level rule that fires on ``e`` at stage ``n``, with its result."""
    found: List[Tuple[Rule, Expr]] = []
    if isinstance(e, Closure):
        looked_up = _lookup(e, n)
        if looked_up is not None:
            found.append((Rule.LOOKUP, looked_up))
        pushed = _propagate(e, n)
        if pushed is not None:
            found.append((pushed[1], pushed[0]))
        return found
    for rule, matcher in _PROPER_RULES.get(type(e), []):
        if isinstance(e, Prim) and e.right is None and rule is Rule.LIFT_PRIM2:
            continue
        result = matcher(e, n)
        if result is not None:
            found.append((rule, result))
    return found


def stuck_reason(e: Expr, n: int) -> Tuple[StuckReason, str]:
    """Why no rule fires on the focus ``e`` at stage ``n``."""
    if isinstance(e, Closure):
        if isinstance(e.term, Var):
            return StuckReason.UNBOUND_VARIABLE, f"unbound variable {e.term.name}"
        return StuckReason.OPEN_TERM, "closure cannot be reduced at this stage"
    if isinstance(e, Var):
        return StuckReason.UNBOUND_VARIABLE, f"free variable {e.name} at stage 0"
    if isinstance(e, App):
        return StuckReason.APPLY_NON_FUNCTION, "operator is not a function"
    if isinstance(e, If):
        return StuckReason.BRANCH_NON_BOOLEAN, "condition is not a boolean"
    if isinstance(e, Unbox):
        if n == 0:
            return StuckReason.UNBOX_OUTSIDE_BOX, "unbox outside any box"
        return StuckReason.UNBOX_NON_BOX, "unbox of a non-box value"
    if isinstance(e, RunIn) and n == 0:
        return StuckReason.RUN_NON_BOX, "run of a non-box value"
    if isinstance(e, (Read, Write, Delete)):
        target, selector = e.subterms()[0], e.subterms()[1]
        if not isinstance(target, Record):
            return StuckReason.READ_NON_RECORD, "field access on a non-record"
        if _string_selector(selector) is None:
            return StuckReason.SELECTOR_NON_STRING, "field selector is not a string"
        proto = target.get(PROTO)
        if isinstance(proto, Hole):
            return StuckReason.HOLE_DEMANDED, "prototype slot is a hole"
        return StuckReason.MISSING_PROTO_FIELD, "no usable __proto__ field"
    if isinstance(e, Prim):
        try:
            eval_prim(e.op, e.left, e.right)
        except PrimitiveFault as fault:
            return StuckReason.PRIM_TYPE_ERROR, str(fault)
        return StuckReason.PRIM_TYPE_ERROR, "primitive operands are not values"
    return StuckReason.OPEN_TERM, f"{type(e).__name__} cannot be evaluated at stage {n}"


def decompose(e: Expr, m: int = 0) -> Union[Decomposition, AlreadyValue, NoRedex]:
    """Split ``e`` at stage ``m`` into a context and the redex it reduces next."""
    located = _focus(e, m, ())
    if located is None:
        return ALREADY_VALUE
    path, node, stage = located
    if not applicable_rules(node, stage):
        reason, _ = stuck_reason(node, stage)
        return NoRedex(reason, node.label)
    return Decomposition(path, node, stage)


def step(e: Expr, m: int = 0) -> StepResult:
    """Take one ``→m`` step."""
    located = _focus(e, m, ())
    if located is None:
        return Value(e, m)
    path, node, stage = located
    rules = applicable_rules(node, stage)
    if not rules:
        reason, detail = stuck_reason(node, stage)
        return Stuck(reason, node.label, detail)
    rule, result = rules[0]
    return Stepped(plug(e, path, result), rule, stage)


def initial_configuration(e: Expr) -> Expr:
    """Wrap a program in the empty environment."""
    if isinstance(e, (Closure, RunIn)):
        return e
    return close(e, EMPTY_ENV)


class Evaluator:
    """Drives :func:`step` to a value, a stuck state, or fuel exhaustion."""

    def __init__(self, fuel: int = DEFAULT_FUEL):
        if fuel < 1:
            raise ValueError(f"fuel must be positive, got {fuel}")
        self.fuel = fuel
        self.logger = logging.getLogger(__name__)

    def run(self, e: Expr, wrap: bool = True) -> Trace:
        current = initial_configuration(e) if wrap else e
        trace = Trace(initial=current)
        for _ in range(self.fuel):
            outcome = step(current, 0)
            if not isinstance(outcome, Stepped):
                trace.final = outcome
                self._report(trace)
                return trace
            self.logger.debug(f"{outcome.rule.value} at stage {outcome.stage}")
            trace.steps.append(TraceStep(outcome.next, outcome.rule, outcome.stage))
            current = outcome.next
        outcome = step(current, 0)
        if isinstance(outcome, (Value, Stuck)):
            trace.final = outcome
        else:
            trace.final = FuelExhausted(current, len(trace.steps))
        self._report(trace)
        return trace

    def _report(self, trace: Trace) -> None:
        final = trace.final
        if isinstance(final, Stuck):
            self.logger.info(
                f"Stuck after {len(trace.steps)} steps: {final.reason.value} at {final.focus}"
            )
        elif isinstance(final, FuelExhausted):
            self.logger.warning(f"Fuel exhausted after {final.steps} steps")
        else:
            self.logger.debug(f"Reached a value after {len(trace.steps)} steps")


def eval_full(e: Expr, fuel: int = DEFAULT_FUEL) -> Trace:
    """Evaluate ``(e, ε)`` at stage 0 and record the trace."""
    return Evaluator(fuel).run(e)
