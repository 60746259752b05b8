"""Constraint-based 0CFA for labelled SLamJS programs.

The analysis assigns every program label a set of abstract values (the
abstract cache) and every variable and record field slot a set of abstract
values (the abstract environment). Constraints are generated syntax-directed
from the program and solved to their least solution with a worklist.

Two variants are provided. The simple one merges all variables of the same
name. The improved one qualifies each variable with the ``fun`` that binds
it, tracking binders through staging with a stack of frames; names free in
a box body are resolved where the box is run or spliced.
"""
import json
import logging
from collections import defaultdict, deque
from dataclasses import dataclass, field
from enum import Enum
from typing import (
    Callable,
    DefaultDict,
    Deque,
    Dict,
    FrozenSet,
    Hashable,
    Iterable,
    List,
    Mapping,
    Optional,
    Set,
    Tuple,
    Union,
)

from ..syntax import (
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
    PrimOp,
    Read,
    Record,
    Run,
    RunIn,
    Unbox,
    Var,
    Write,
    iter_nodes,
    strip_markers_shallow,
)
from .base import AnalysisError, Variant

logger = logging.getLogger(__name__)

GLOBAL = -1


class AbsKind(str, Enum):
    NULL = "NULL"
    UNDEF = "UNDEF"
    BOOL = "BOOL"
    NUM = "NUM"
    STR = "STR"
    FUN = "FUN"
    BOX = "BOX"
    REC = "REC"


@dataclass(frozen=True, order=True)
class AbsVal:
    """An abstract value.

    ``ref`` is the body label for ``FUN`` and ``BOX`` and the allocation
    label for ``REC``. A ``FUN`` also remembers its parameter and the label
    of the ``fun`` node itself, which the improved variant uses as binder.
    """

    kind: AbsKind
    ref: int = -1
    param: str = ""
    site: int = -1

    @classmethod
    def fun(cls, param: str, body: int, site: int) -> "AbsVal":
        return cls(AbsKind.FUN, body, param, site)

    @classmethod
    def box(cls, body: int) -> "AbsVal":
        return cls(AbsKind.BOX, body)

    @classmethod
    def rec(cls, alloc: int) -> "AbsVal":
        return cls(AbsKind.REC, alloc)

    def __str__(self) -> str:
        if self.kind is AbsKind.FUN:
            return f"FUN({self.param}, {self.ref})"
        if self.kind in (AbsKind.BOX, AbsKind.REC):
            return f"{self.kind.value}({self.ref})"
        return self.kind.value


_CONST_KINDS = {
    ConstKind.NULL: AbsKind.NULL,
    ConstKind.UNDEF: AbsKind.UNDEF,
    ConstKind.BOOL: AbsKind.BOOL,
    ConstKind.NUM: AbsKind.NUM,
    ConstKind.STR: AbsKind.STR,
}

_PRIM_RESULTS = {
    PrimOp.EQ: AbsKind.BOOL,
    PrimOp.SUB: AbsKind.NUM,
    PrimOp.TYPEOF: AbsKind.STR,
}


def abstract_const(k: Const) -> AbsVal:
    """The abstract value of a literal: its kind, forgetting the value."""
    return AbsVal(_CONST_KINDS[k.kind])


@dataclass(frozen=True)
class NameVar:
    """A variable, qualified by its binding ``fun`` label in the improved variant."""

    name: str
    binder: Optional[int] = None

    def __str__(self) -> str:
        if self.binder is None:
            return self.name
        if self.binder == GLOBAL:
            return f"{self.name}@global"
        return f"{self.name}@{self.binder}"


@dataclass(frozen=True)
class FieldVar:
    """Field ``field`` of the record allocated at label ``record``."""

    record: int
    field: str

    def __str__(self) -> str:
        return f"{self.record}.{self.field}"


AbsVar = Union[NameVar, FieldVar]


@dataclass(frozen=True)
class GammaCell:
    label: int

    def __str__(self) -> str:
        return f"Γ({self.label})"


@dataclass(frozen=True)
class RhoCell:
    var: AbsVar

    def __str__(self) -> str:
        return f"ϱ({self.var})"


@dataclass(frozen=True)
class ProtoCell:
    """Allocation labels on the prototype chain of record ``record``."""

    record: int

    def __str__(self) -> str:
        return f"proto({self.record})"


@dataclass(frozen=True)
class BindCell:
    """Binders a variable occurrence may resolve to (improved variant)."""

    occurrence: int

    def __str__(self) -> str:
        return f"bind({self.occurrence})"


@dataclass(frozen=True)
class FreeCell:
    """Variable occurrences left unresolved inside box ``box`` (improved variant)."""

    box: int

    def __str__(self) -> str:
        return f"free({self.box})"


Cell = Union[GammaCell, RhoCell, ProtoCell, BindCell, FreeCell]


@dataclass(frozen=True)
class Member:
    token: Hashable
    cell: Cell

    def __str__(self) -> str:
        return f"{self.token} ∈ {self.cell}"


@dataclass(frozen=True)
class Subset:
    source: Cell
    target: Cell

    def __str__(self) -> str:
        return f"{self.source} ⊆ {self.target}"


@dataclass(frozen=True)
class Conditional:
    token: Hashable
    cell: Cell
    then: "Constraint"

    def __str__(self) -> str:
        return f"{self.token} ∈ {self.cell} ⇒ {self.then}"


Constraint = Union[Member, Subset, Conditional]


def proto_closure(
    label: int, rho: Callable[[AbsVar], Iterable[AbsVal]]
) -> FrozenSet[int]:
    """Allocation labels reachable from ``label`` through ``__proto__`` slots.

    The least set containing ``label`` and closed under following every
    ``REC`` found in a member's ``__proto__`` slot. Cycles terminate.
    """
    seen = {label}
    pending = deque([label])
    while pending:
        current = pending.popleft()
        for value in rho(FieldVar(current, PROTO)):
            if value.kind is AbsKind.REC and value.ref not in seen:
                seen.add(value.ref)
                pending.append(value.ref)
    return frozenset(seen)


@dataclass(frozen=True)
class _Frame:
    """Names bound at one stage, and the box that opened the stage."""

    owner: Optional[int]
    names: Mapping[str, int] = field(default_factory=dict)

    def bind(self, name: str, binder: int) -> "_Frame":
        return _Frame(self.owner, {**self.names, name: binder})


_ROOT: Tuple[_Frame, ...] = (_Frame(None),)


def string_universe(program: Expr) -> Tuple[str, ...]:
    """Strings that can name a field: literals, record field names and ``__proto__``."""
    found = {PROTO}
    for node in iter_nodes(program):
        core = node.term if isinstance(node, Closure) else node
        if isinstance(core, Record):
            found.update(core.field_names())
        elif isinstance(core, Const) and core.kind is ConstKind.STR:
            found.add(core.value)  # type: ignore[arg-type]
    return tuple(sorted(found))


@dataclass(frozen=True)
class _Universe:
    """The finite sets every quantifier of the constraint rules ranges over."""

    funs: Tuple[AbsVal, ...]
    boxes: Tuple[Tuple[int, int], ...]
    records: Tuple[int, ...]
    strings: Tuple[str, ...]
    occurrences: Mapping[int, str]

    @classmethod
    def of(cls, program: Expr) -> "_Universe":
        funs: List[AbsVal] = []
        boxes: List[Tuple[int, int]] = []
        records: List[int] = []
        occurrences: Dict[int, str] = {}
        for node in iter_nodes(program):
            core = node.term if isinstance(node, Closure) else node
            if isinstance(core, Fun):
                funs.append(AbsVal.fun(core.param, core.body.label, node.label))
            elif isinstance(core, Box):
                boxes.append((node.label, core.body.label))
            elif isinstance(core, Record):
                records.append(node.label)
            elif isinstance(core, Var):
                occurrences[node.label] = core.name
        return cls(
            tuple(sorted(set(funs))),
            tuple(sorted(set(boxes))),
            tuple(sorted(set(records))),
            string_universe(program),
            occurrences,
        )


class _ConstraintBuilder:
    """Syntax-directed constraint generation for one program and variant."""

    def __init__(self, program: Expr, variant: Variant):
        self.program = program
        self.variant = variant
        self.universe = _Universe.of(program)
        self.out: List[Constraint] = []

    @property
    def improved(self) -> bool:
        return self.variant is Variant.IMPROVED

    def build(self) -> List[Constraint]:
        self.walk(self.program, _ROOT)
        self.prototypes()
        return self.out

    def emit(self, constraint: Constraint) -> None:
        self.out.append(constraint)

    def param_var(self, f: AbsVal) -> NameVar:
        return NameVar(f.param, f.site if self.improved else None)

    def walk(self, e: Expr, frames: Tuple[_Frame, ...]) -> None:
        core = e.term if isinstance(e, Closure) else e
        if self.improved and isinstance(e, (Closure, RunIn)):
            raise AnalysisError(
                "the improved variant only analyses source programs, "
                f"found {type(e).__name__} at label {e.label}"
            )
        top = frames[-1]
        if isinstance(core, Fun):
            inner = frames[:-1] + (top.bind(core.param, e.label),)
            self.walk(core.body, inner)
        elif isinstance(core, Box):
            self.walk(core.body, frames + (_Frame(e.label),))
        elif isinstance(core, Unbox):
            self.walk(core.body, frames[:-1] if len(frames) > 1 else frames)
        else:
            for sub in core.subterms():
                self.walk(sub, frames)
        env = e.env if isinstance(e, (Closure, RunIn)) else None
        if env is not None:
            for name, value in env.bindings:
                self.walk(value, _ROOT)
                self.emit(Subset(GammaCell(value.label), RhoCell(NameVar(name))))
        self.node(e.label, core, frames)

    def node(self, label: int, e: Expr, frames: Tuple[_Frame, ...]) -> None:
        here = GammaCell(label)
        if isinstance(e, Const):
            self.emit(Member(abstract_const(e), here))
        elif isinstance(e, Var):
            self.variable(label, e.name, frames[-1])
        elif isinstance(e, Record):
            self.emit(Member(AbsVal.rec(label), here))
            for name, value in e.fields:
                self.emit(
                    Subset(GammaCell(value.label), RhoCell(FieldVar(label, name)))
                )
        elif isinstance(e, Fun):
            self.emit(Member(AbsVal.fun(e.param, e.body.label, label), here))
        elif isinstance(e, App):
            operator = GammaCell(e.fn.label)
            for f in self.universe.funs:
                self.emit(
                    Conditional(
                        f,
                        operator,
                        Subset(GammaCell(e.arg.label), RhoCell(self.param_var(f))),
                    )
                )
                self.emit(Conditional(f, operator, Subset(GammaCell(f.ref), here)))
        elif isinstance(e, Box):
            self.emit(Member(AbsVal.box(e.body.label), here))
        elif isinstance(e, (Unbox, Run, RunIn)):
            self.code_use(label, e.body.label, frames[-1])
        elif isinstance(e, If):
            self.emit(Subset(GammaCell(e.then.label), here))
            self.emit(Subset(GammaCell(e.orelse.label), here))
        elif isinstance(e, Read):
            self.read(label, e.target.label)
        elif isinstance(e, Write):
            target = GammaCell(e.target.label)
            for record in self.universe.records:
                for name in self.universe.strings:
                    self.emit(
                        Conditional(
                            AbsVal.rec(record),
                            target,
                            Subset(
                                GammaCell(e.value.label),
                                RhoCell(FieldVar(record, name)),
                            ),
                        )
                    )
            self.emit(Subset(target, here))
        elif isinstance(e, Delete):
            self.emit(Subset(GammaCell(e.target.label), here))
        elif isinstance(e, Marked):
            self.emit(Subset(GammaCell(e.body.label), here))
        elif isinstance(e, Prim):
            self.emit(Member(AbsVal(_PRIM_RESULTS[e.op]), here))
        elif not isinstance(e, Hole):
            raise AnalysisError(f"cannot analyse {type(e).__name__} at label {label}")

    def read(self, label: int, target: int) -> None:
        here = GammaCell(label)
        self.emit(Member(AbsVal(AbsKind.UNDEF), here))
        for record in self.universe.records:
            for holder in self.universe.records:
                for name in self.universe.strings:
                    self.emit(
                        Conditional(
                            AbsVal.rec(record),
                            GammaCell(target),
                            Conditional(
                                holder,
                                ProtoCell(record),
                                Subset(RhoCell(FieldVar(holder, name)), here),
                            ),
                        )
                    )

    def prototypes(self) -> None:
        records = self.universe.records
        for record in records:
            chain = ProtoCell(record)
            self.emit(Member(record, chain))
            for holder in records:
                for parent in records:
                    self.emit(
                        Conditional(
                            holder,
                            chain,
                            Conditional(
                                AbsVal.rec(parent),
                                RhoCell(FieldVar(holder, PROTO)),
                                Member(parent, chain),
                            ),
                        )
                    )

    def variable(self, label: int, name: str, top: _Frame) -> None:
        here = GammaCell(label)
        if not self.improved:
            self.emit(Subset(RhoCell(NameVar(name)), here))
            return
        self.emit(self.resolve(label, name, top))
        binders = [f.site for f in self.universe.funs if f.param == name] + [GLOBAL]
        for binder in binders:
            self.emit(
                Conditional(
                    binder,
                    BindCell(label),
                    Subset(RhoCell(NameVar(name, binder)), here),
                )
            )

    def resolve(self, occurrence: int, name: str, frame: _Frame) -> Constraint:
        """Resolve ``occurrence`` of ``name`` against ``frame``."""
        if name in frame.names:
            return Member(frame.names[name], BindCell(occurrence))
        if frame.owner is None:
            return Member(GLOBAL, BindCell(occurrence))
        return Member(occurrence, FreeCell(frame.owner))

    def code_use(self, label: int, operand: int, top: _Frame) -> None:
        """``unbox``, ``run`` and ``run in``: the code's value flows out."""
        here = GammaCell(label)
        for box, body in self.universe.boxes:
            guard = AbsVal.box(body)
            self.emit(Conditional(guard, GammaCell(operand), Subset(GammaCell(body), here)))
            if not self.improved:
                continue
            for occurrence, name in self.universe.occurrences.items():
                self.emit(
                    Conditional(
                        guard,
                        GammaCell(operand),
                        Conditional(
                            occurrence,
                            FreeCell(box),
                            self.resolve(occurrence, name, top),
                        ),
                    )
                )


def gen_cfa_constraints(
    program: Expr, variant: Variant = Variant.SIMPLE
) -> List[Constraint]:
    """All constraints a solution for ``program`` must satisfy.

    Raises:
        AnalysisError: The improved variant was given a term containing
            closures or ``run in`` forms.
    """
    variant = Variant(variant)
    constraints = _ConstraintBuilder(program, variant).build()
    logger.debug(f"Generated {len(constraints)} {variant.value} constraints")
    return constraints


@dataclass(frozen=True, eq=False)
class CFASolution:
    """A solved abstract cache and environment for one program."""

    program: Expr
    variant: Variant
    cells: Mapping[Cell, FrozenSet[Hashable]]
    iterations: int = 0

    def values(self, cell: Cell) -> FrozenSet[Hashable]:
        return self.cells.get(cell, frozenset())

    def gamma(self, label: int) -> FrozenSet[AbsVal]:
        return self.values(GammaCell(label))  # type: ignore[return-value]

    def rho(self, var: AbsVar) -> FrozenSet[AbsVal]:
        return self.values(RhoCell(var))  # type: ignore[return-value]

    def proto(self, record: int) -> FrozenSet[int]:
        return proto_closure(record, self.rho)

    def binders(self, occurrence: int) -> FrozenSet[int]:
        """Binders a variable occurrence resolves to; empty for the simple variant."""
        return self.values(BindCell(occurrence))  # type: ignore[return-value]

    def labels(self) -> List[int]:
        return sorted({node.label for node in iter_nodes(self.program)})

    def abstract_vars(self) -> List[AbsVar]:
        found = {cell.var for cell in self.cells if isinstance(cell, RhoCell)}
        return sorted(found, key=str)

    def to_dict(self) -> Dict[str, Dict[str, List[str]]]:
        """Canonical form: every label, every abstract variable, sorted values."""
        gamma = {
            str(label): sorted(str(v) for v in self.gamma(label))
            for label in self.labels()
        }
        rho = {
            str(var): sorted(str(v) for v in self.rho(var))
            for var in self.abstract_vars()
        }
        return {"gamma": gamma, "rho": rho}

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, ensure_ascii=False)


class CFASolver:
    """Worklist solver computing the least solution of a constraint set.

    Subset constraints become edges between cells. A conditional is parked
    on its guard ``(cell, token)`` and installed the moment the token
    arrives, so each token is propagated through each edge at most once.
    """

    def __init__(self) -> None:
        self.logger = logging.getLogger(__name__)

    def solve(
        self,
        constraints: Iterable[Constraint],
        program: Expr,
        variant: Variant = Variant.SIMPLE,
    ) -> CFASolution:
        values: DefaultDict[Cell, Set[Hashable]] = defaultdict(set)
        edges: DefaultDict[Cell, Set[Cell]] = defaultdict(set)
        parked: DefaultDict[Tuple[Cell, Hashable], List[Constraint]] = defaultdict(list)
        worklist: Deque[Tuple[Cell, Hashable]] = deque()

        def add(token: Hashable, cell: Cell) -> None:
            if token not in values[cell]:
                values[cell].add(token)
                worklist.append((cell, token))

        def install(c: Constraint) -> None:
            if isinstance(c, Member):
                add(c.token, c.cell)
            elif isinstance(c, Subset):
                if c.target not in edges[c.source]:
                    edges[c.source].add(c.target)
                    for token in list(values[c.source]):
                        add(token, c.target)
            elif c.token in values[c.cell]:
                install(c.then)
            else:
                parked[(c.cell, c.token)].append(c.then)

        count = 0
        for c in constraints:
            install(c)
            count += 1
        iterations = 0
        while worklist:
            cell, token = worklist.popleft()
            iterations += 1
            for target in list(edges[cell]):
                add(token, target)
            for c in parked.pop((cell, token), ()):
                install(c)
        self.logger.info(
            f"Solved {count} {variant.value} constraints in {iterations} iterations"
        )
        cells = {cell: frozenset(tokens) for cell, tokens in values.items() if tokens}
        return CFASolution(program, variant, cells, iterations)


def solve(program: Expr, variant: Variant = Variant.SIMPLE) -> CFASolution:
    """Generate and solve the constraints of ``program``."""
    variant = Variant(variant)
    return CFASolver().solve(gen_cfa_constraints(program, variant), program, variant)


def _satisfied(c: Constraint, solution: CFASolution) -> bool:
    if isinstance(c, Member):
        return c.token in solution.values(c.cell)
    if isinstance(c, Subset):
        return solution.values(c.source) <= solution.values(c.target)
    return c.token not in solution.values(c.cell) or _satisfied(c.then, solution)


def check_acceptable(program: Expr, solution: CFASolution) -> List[Constraint]:
    """Constraints of ``program`` that ``solution`` violates; empty when acceptable."""
    return [
        c
        for c in gen_cfa_constraints(program, solution.variant)
        if not _satisfied(c, solution)
    ]


def perturb(solution: CFASolution, cell: Cell, token: Hashable) -> CFASolution:
    """``solution`` with ``token`` removed from ``cell``."""
    cells = dict(solution.cells)
    cells[cell] = solution.values(cell) - {token}
    return CFASolution(solution.program, solution.variant, cells, solution.iterations)


def abstract_result(value: Expr) -> Optional[Callable[[AbsVal], bool]]:
    """A predicate recognising the abstract values that describe ``value``.

    Markers are skipped. Returns ``None`` for holes, which every cache
    describes.
    """
    _, core = strip_markers_shallow(value)
    if isinstance(core, Hole):
        return None
    if isinstance(core, Const):
        expected = abstract_const(core)
        return lambda v: v == expected
    if isinstance(core, Closure) and isinstance(core.term, Fun):
        fun = core.term
        return lambda v: (
            v.kind is AbsKind.FUN and v.param == fun.param and v.ref == fun.body.label
        )
    if isinstance(core, Box):
        body = core.body.label
        return lambda v: v.kind is AbsKind.BOX and v.ref == body
    if isinstance(core, Record):
        return lambda v: v.kind is AbsKind.REC
    raise AnalysisError(f"{type(core).__name__} is not a stage-0 value")


def check_result_soundness(solution: CFASolution, result: Optional[Expr]) -> bool:
    """The evaluated result is described by the cache entry of the program root.

    Trivially true when evaluation produced no value.
    """
    if result is None:
        return True
    matches = abstract_result(result)
    if matches is None:
        return True
    root = solution.program.label
    sound = any(matches(v) for v in solution.gamma(root))
    if not sound:
        logger.debug(f"Result is not described by Γ({root})")
    return sound
