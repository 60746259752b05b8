"""Labelled abstract syntax for SLamJS.

Every node is an immutable dataclass carrying a ``label``. Source programs
use the plain constructors plus ``Marked``; ``Closure``, ``RunIn`` and
``Hole`` only appear during evaluation or when intermediate forms are
parsed explicitly.

The module also provides the structural operations the rest of the package
shares: marker erasure, unmarking, the prefix order, stage-indexed value
classification and post-order label numbering.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, FrozenSet, Iterable, Iterator, Optional, Tuple, Union

PROTO = "__proto__"

ConstValue = Union[None, bool, float, str]


class ConstKind(str, Enum):
    """Kinds of literal constants."""

    UNDEF = "undef"
    NULL = "null"
    BOOL = "bool"
    NUM = "num"
    STR = "str"


class PrimOp(str, Enum):
    """Primitive operators available in source programs."""

    EQ = "eq"
    SUB = "sub"
    TYPEOF = "typeof"


class Expr:
    """Base class of all labelled expressions.

    Subclasses are frozen dataclasses whose last field is ``label``.
    """

    label: int

    def subterms(self) -> Tuple["Expr", ...]:
        """Direct subexpressions, excluding environment bindings."""
        return ()

    def with_subterms(self, subs: Tuple["Expr", ...]) -> "Expr":
        """Rebuild this node with new subexpressions in ``subterms`` order."""
        return self

    def relabel(self, label: int) -> "Expr":
        return replace(self, label=label)  # type: ignore[type-var]


@dataclass(frozen=True)
class Env:
    """Explicit substitution: a finite map from names to stage-0 values.

    Bindings are kept sorted by name so equal environments compare equal.
    """

    bindings: Tuple[Tuple[str, Expr], ...] = ()

    def lookup(self, name: str) -> Optional[Expr]:
        for bound, value in self.bindings:
            if bound == name:
                return value
        return None

    def extend(self, name: str, value: Expr) -> "Env":
        kept = [(n, v) for n, v in self.bindings if n != name]
        kept.append((name, value))
        return Env(tuple(sorted(kept, key=lambda pair: pair[0])))

    def names(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.bindings)

    def values(self) -> Tuple[Expr, ...]:
        return tuple(value for _, value in self.bindings)

    def map_values(self, fn: Callable[[Expr], Expr]) -> "Env":
        return Env(tuple((name, fn(value)) for name, value in self.bindings))

    def __len__(self) -> int:
        return len(self.bindings)


EMPTY_ENV = Env()


@dataclass(frozen=True)
class Const(Expr):
    kind: ConstKind
    value: ConstValue = None
    label: int = 0

    @classmethod
    def num(cls, value: float, label: int = 0) -> "Const":
        return cls(ConstKind.NUM, float(value), label)

    @classmethod
    def string(cls, value: str, label: int = 0) -> "Const":
        return cls(ConstKind.STR, value, label)

    @classmethod
    def boolean(cls, value: bool, label: int = 0) -> "Const":
        return cls(ConstKind.BOOL, bool(value), label)

    @classmethod
    def null(cls, label: int = 0) -> "Const":
        return cls(ConstKind.NULL, None, label)

    @classmethod
    def undef(cls, label: int = 0) -> "Const":
        return cls(ConstKind.UNDEF, None, label)


@dataclass(frozen=True)
class Record(Expr):
    fields: Tuple[Tuple[str, Expr], ...]
    label: int = 0

    def __post_init__(self) -> None:
        names = [name for name, _ in self.fields]
        if len(names) != len(set(names)):
            raise ValueError(f"duplicate record field in {names}")

    def subterms(self) -> Tuple[Expr, ...]:
        return tuple(value for _, value in self.fields)

    def with_subterms(self, subs: Tuple[Expr, ...]) -> Expr:
        names = [name for name, _ in self.fields]
        return Record(tuple(zip(names, subs)), self.label)

    def field_names(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.fields)

    def get(self, name: str) -> Optional[Expr]:
        for field_name, value in self.fields:
            if field_name == name:
                return value
        return None


@dataclass(frozen=True)
class Var(Expr):
    name: str
    label: int = 0


@dataclass(frozen=True)
class Fun(Expr):
    param: str
    body: Expr
    label: int = 0

    def subterms(self) -> Tuple[Expr, ...]:
        return (self.body,)

    def with_subterms(self, subs: Tuple[Expr, ...]) -> Expr:
        return Fun(self.param, subs[0], self.label)


@dataclass(frozen=True)
class App(Expr):
    fn: Expr
    arg: Expr
    label: int = 0

    def subterms(self) -> Tuple[Expr, ...]:
        return (self.fn, self.arg)

    def with_subterms(self, subs: Tuple[Expr, ...]) -> Expr:
        return App(subs[0], subs[1], self.label)


@dataclass(frozen=True)
class Box(Expr):
    body: Expr
    label: int = 0

    def subterms(self) -> Tuple[Expr, ...]:
        return (self.body,)

    def with_subterms(self, subs: Tuple[Expr, ...]) -> Expr:
        return Box(subs[0], self.label)


@dataclass(frozen=True)
class Unbox(Expr):
    body: Expr
    label: int = 0

    def subterms(self) -> Tuple[Expr, ...]:
        return (self.body,)

    def with_subterms(self, subs: Tuple[Expr, ...]) -> Expr:
        return Unbox(subs[0], self.label)


@dataclass(frozen=True)
class Run(Expr):
    body: Expr
    label: int = 0

    def subterms(self) -> Tuple[Expr, ...]:
        return (self.body,)

    def with_subterms(self, subs: Tuple[Expr, ...]) -> Expr:
        return Run(subs[0], self.label)


@dataclass(frozen=True)
class If(Expr):
    cond: Expr
    then: Expr
    orelse: Expr
    label: int = 0

    def subterms(self) -> Tuple[Expr, ...]:
        return (self.cond, self.then, self.orelse)

    def with_subterms(self, subs: Tuple[Expr, ...]) -> Expr:
        return If(subs[0], subs[1], subs[2], self.label)


@dataclass(frozen=True)
class Read(Expr):
    target: Expr
    selector: Expr
    label: int = 0

    def subterms(self) -> Tuple[Expr, ...]:
        return (self.target, self.selector)

    def with_subterms(self, subs: Tuple[Expr, ...]) -> Expr:
        return Read(subs[0], subs[1], self.label)


@dataclass(frozen=True)
class Write(Expr):
    target: Expr
    selector: Expr
    value: Expr
    label: int = 0

    def subterms(self) -> Tuple[Expr, ...]:
        return (self.target, self.selector, self.value)

    def with_subterms(self, subs: Tuple[Expr, ...]) -> Expr:
        return Write(subs[0], subs[1], subs[2], self.label)


@dataclass(frozen=True)
class Delete(Expr):
    target: Expr
    selector: Expr
    label: int = 0

    def subterms(self) -> Tuple[Expr, ...]:
        return (self.target, self.selector)

    def with_subterms(self, subs: Tuple[Expr, ...]) -> Expr:
        return Delete(subs[0], subs[1], self.label)


@dataclass(frozen=True)
class Prim(Expr):
    op: PrimOp
    left: Expr
    right: Optional[Expr] = None
    label: int = 0

    def subterms(self) -> Tuple[Expr, ...]:
        if self.right is None:
            return (self.left,)
        return (self.left, self.right)

    def with_subterms(self, subs: Tuple[Expr, ...]) -> Expr:
        right = subs[1] if len(subs) > 1 else None
        return Prim(self.op, subs[0], right, self.label)


@dataclass(frozen=True)
class Marked(Expr):
    marker: str
    body: Expr
    label: int = 0

    def subterms(self) -> Tuple[Expr, ...]:
        return (self.body,)

    def with_subterms(self, subs: Tuple[Expr, ...]) -> Expr:
        return Marked(self.marker, subs[0], self.label)


@dataclass(frozen=True)
class Hole(Expr):
    label: int = 0


@dataclass(frozen=True)
class Closure(Expr):
    """Explicit substitution ``(t, ρ)``; ``term.label`` always equals ``label``."""

    term: Expr
    env: Env
    label: int = 0

    def subterms(self) -> Tuple[Expr, ...]:
        return self.term.subterms()

    def with_subterms(self, subs: Tuple[Expr, ...]) -> Expr:
        return Closure(self.term.with_subterms(subs), self.env, self.label)

    def relabel(self, label: int) -> Expr:
        return Closure(self.term.relabel(label), self.env, label)


@dataclass(frozen=True)
class RunIn(Expr):
    body: Expr
    env: Env
    label: int = 0

    def subterms(self) -> Tuple[Expr, ...]:
        return (self.body,)

    def with_subterms(self, subs: Tuple[Expr, ...]) -> Expr:
        return RunIn(subs[0], self.env, self.label)


SOURCE_FORMS = (
    Const,
    Record,
    Var,
    Fun,
    App,
    Box,
    Unbox,
    Run,
    If,
    Read,
    Write,
    Delete,
    Prim,
)
INTERMEDIATE_FORMS = (Closure, RunIn, Hole)


def close(e: Expr, env: Env) -> Closure:
    """Wrap ``e`` in an environment, keeping its label."""
    return Closure(e, env, e.label)


def env_of(e: Expr) -> Optional[Env]:
    if isinstance(e, (Closure, RunIn)):
        return e.env
    return None


def map_expr(e: Expr, fn: Callable[[Expr], Expr]) -> Expr:
    """Apply ``fn`` to every direct subexpression and environment value of ``e``."""
    if isinstance(e, Closure):
        inner = e.term.with_subterms(tuple(fn(s) for s in e.term.subterms()))
        return Closure(inner, e.env.map_values(fn), e.label)
    rebuilt = e.with_subterms(tuple(fn(s) for s in e.subterms()))
    if isinstance(rebuilt, RunIn):
        return RunIn(rebuilt.body, rebuilt.env.map_values(fn), rebuilt.label)
    return rebuilt


def iter_nodes(e: Expr) -> Iterator[Expr]:
    """Yield every node of ``e`` in post-order, environments included."""
    for sub in e.subterms():
        yield from iter_nodes(sub)
    env = env_of(e)
    if env is not None:
        for value in env.values():
            yield from iter_nodes(value)
    yield e


def node_count(e: Expr) -> int:
    return sum(1 for _ in iter_nodes(e))


def number_labels(e: Expr, start: int = 0) -> Expr:
    """Relabel ``e`` with consecutive labels in left-to-right post-order.

    Children are numbered before their parent, so for a marked constant
    ``(H : 1)`` the constant receives the smaller label.
    """
    counter = itertools.count(start)

    def walk(node: Expr) -> Expr:
        if isinstance(node, Closure):
            subs = tuple(walk(s) for s in node.term.subterms())
            env = node.env.map_values(walk)
            label = next(counter)
            return Closure(node.term.with_subterms(subs).relabel(label), env, label)
        subs = tuple(walk(s) for s in node.subterms())
        rebuilt = node.with_subterms(subs)
        if isinstance(rebuilt, RunIn):
            rebuilt = RunIn(rebuilt.body, rebuilt.env.map_values(walk), rebuilt.label)
        return rebuilt.relabel(next(counter))

    return walk(e)


def forget_labels(e: Expr) -> Expr:
    """Set every label to 0, for comparisons that ignore program points."""
    return map_expr(e, forget_labels).relabel(0)


def _marker_at(e: Expr) -> Optional[Marked]:
    """The marker node at ``e``, seeing through a closure over it."""
    if isinstance(e, Closure):
        e = e.term
    return e if isinstance(e, Marked) else None


def markers_of(e: Expr) -> FrozenSet[str]:
    """The exact set of marker names occurring anywhere in ``e``."""
    found = (_marker_at(n) for n in iter_nodes(e))
    return frozenset(m.marker for m in found if m is not None)


def unmark(e: Expr) -> Expr:
    """Strip every marker, keeping the labels of the marked subterms."""
    if isinstance(e, Marked):
        return unmark(e.body)
    if isinstance(e, Closure) and isinstance(e.term, Marked):
        return unmark(close(e.term.body, e.env))
    return map_expr(e, unmark)


def erase(e: Expr, keep: Iterable[str]) -> Expr:
    """Replace each ``(m : e')`` with ``m`` outside ``keep`` by a hole.

    The hole takes the label of the replaced marker node.
    A closure over such a marker becomes a closure over the hole.
    """
    allowed = frozenset(keep)

    def walk(node: Expr) -> Expr:
        marked = _marker_at(node)
        if marked is not None and marked.marker not in allowed:
            if isinstance(node, Closure):
                return Closure(Hole(node.label), node.env.map_values(walk), node.label)
            return Hole(node.label)
        return map_expr(node, walk)

    return walk(e)


def is_prefix(smaller: Expr, larger: Expr) -> bool:
    """Whether ``smaller`` is ``larger`` with some subterms replaced by holes.

    Labels are not compared.
    """
    if isinstance(smaller, Hole):
        return True
    if type(smaller) is not type(larger):
        return False
    if _shape(smaller) != _shape(larger):
        return False
    subs_small, subs_large = smaller.subterms(), larger.subterms()
    if len(subs_small) != len(subs_large):
        return False
    if not all(is_prefix(a, b) for a, b in zip(subs_small, subs_large)):
        return False
    env_small, env_large = env_of(smaller), env_of(larger)
    if env_small is None or env_large is None:
        return True
    if env_small.names() != env_large.names():
        return False
    return all(is_prefix(a, b) for a, b in zip(env_small.values(), env_large.values()))


def _shape(e: Expr) -> tuple:
    """Non-expression payload of a node, used for structural comparison."""
    if isinstance(e, Closure):
        return ("closure", type(e.term).__name__, _shape(e.term))
    if isinstance(e, Const):
        return (e.kind, e.value)
    if isinstance(e, Record):
        return e.field_names()
    if isinstance(e, Var):
        return (e.name,)
    if isinstance(e, Fun):
        return (e.param,)
    if isinstance(e, Prim):
        return (e.op, e.right is None)
    if isinstance(e, Marked):
        return (e.marker,)
    return ()


def has_holes(e: Expr) -> bool:
    return any(isinstance(n, Hole) for n in iter_nodes(e))


def has_intermediate_forms(e: Expr) -> bool:
    return any(isinstance(n, INTERMEDIATE_FORMS) for n in iter_nodes(e))


def strip_markers_shallow(e: Expr) -> Tuple[Tuple[str, ...], Expr]:
    """Peel the outermost chain of markers, returning them outermost first."""
    markers = []
    while isinstance(e, Marked):
        markers.append(e.marker)
        e = e.body
    return tuple(markers), e


def is_value(e: Expr, stage: int) -> bool:
    """Stage-indexed value classification.

    At stage 0 the values are constants, records of values, ``box`` of a
    stage-1 value, closures over ``fun``, marked values and holes. From
    stage 1 upwards code is a value when its parts are values of the
    appropriate stage; ``unbox`` only counts from stage 2.
    """
    if isinstance(e, (Const, Hole)):
        return True
    if isinstance(e, Marked):
        return is_value(e.body, stage)
    if isinstance(e, Record):
        return all(is_value(v, stage) for _, v in e.fields)
    if isinstance(e, Box):
        return is_value(e.body, stage + 1)
    if stage == 0:
        return isinstance(e, Closure) and isinstance(e.term, Fun)
    if isinstance(e, Var):
        return True
    if isinstance(e, Unbox):
        return stage >= 2 and is_value(e.body, stage - 1)
    if isinstance(e, (Fun, App, Run, If, Read, Write, Delete, Prim)):
        return all(is_value(s, stage) for s in e.subterms())
    return False


def is_marker_constant_value(e: Expr) -> bool:
    """Whether ``e`` is a constant wrapped in zero or more markers."""
    _, core = strip_markers_shallow(e)
    return isinstance(core, Const)
