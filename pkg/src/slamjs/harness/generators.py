"""Hypothesis strategies for well-formed SLamJS programs.

Generated programs are typed by construction and have no recursion, so they
terminate. Binders are either fresh or drawn from a small pool per type, so
programs shadow names and code values capture names where they run. A pooled
name always has the same type, which keeps a captured name bound to a value
of the expected type wherever the code is run. Names bound on the way to a
returned ``box`` are hidden from its code, which runs outside their scope.
Records always carry ``"__proto__"``; field ``"a"`` is always a number
reachable through the prototype chain.
"""
import itertools
from typing import Callable, Dict, List, Sequence, Tuple

from hypothesis import strategies as st

from ..syntax import (
    PROTO,
    App,
    Box,
    Const,
    Delete,
    Expr,
    Fun,
    If,
    Marked,
    Prim,
    PrimOp,
    Read,
    Record,
    Run,
    Unbox,
    Var,
    Write,
    number_labels,
)
from ..semantics.evaluator import Path

DEFAULT_MARKERS = ("H", "L", "I")

NUM, BOOL, STR, REC, FUN, BOX = "num", "bool", "str", "rec", "fun", "box"
BASE_TYPES = (NUM, BOOL, STR, REC)

# reused binder names; disjoint across types
NAME_POOLS: Dict[str, Tuple[str, ...]] = {
    NUM: ("n", "m"),
    BOOL: ("p", "q"),
    STR: ("s", "t"),
    REC: ("r", "o"),
    BOX: ("c", "d"),
}

# name -> (type, stage it is bound at, visible to quoted code)
Scope = Dict[str, Tuple[str, int, bool]]


class _ProgramBuilder:
    def __init__(
        self,
        draw: Callable,
        extra_stages: int,
        markers: Sequence[str],
        mark_percent: int,
    ):
        self.draw = draw
        self.extra_stages = extra_stages
        self.markers = tuple(markers)
        self.mark_percent = mark_percent
        self.fresh = itertools.count()

    def chance(self, percent: int) -> bool:
        return self.draw(st.integers(0, 99)) < percent

    def name(self, ty: str) -> str:
        """A binder for a value of type ``ty``: pooled half of the time, else fresh."""
        if self.chance(50):
            return self.draw(st.sampled_from(NAME_POOLS[ty]))
        return f"v{next(self.fresh)}"

    def mark(self, e: Expr, percent: int) -> Expr:
        if self.markers and self.chance(percent):
            return Marked(self.draw(st.sampled_from(self.markers)), e)
        return e

    def variables(self, ty: str, stage: int, scope: Scope) -> List[str]:
        return sorted(
            name
            for name, (bound_ty, bound_stage, quotable) in scope.items()
            if bound_ty == ty
            and (bound_stage == stage or (bound_stage == 0 and quotable))
        )

    def expr(self, ty: str, depth: int, stage: int, scope: Scope) -> Expr:
        if depth <= 0:
            return self.leaf(ty, stage, scope)
        forms = ["leaf", "let", "if", "app", "mark"]
        if stage < self.extra_stages:
            forms.append("run")
        if stage > 0:
            forms.append("unbox")
        forms.extend(_SPECIFIC[ty])
        if stage >= self.extra_stages and "runbox" in forms:
            forms.remove("runbox")
        if ty == BOX and stage + 1 >= self.extra_stages and "run" in forms:
            forms.remove("run")
        form = self.draw(st.sampled_from(forms))
        d = depth - 1
        if form == "leaf":
            return self.leaf(ty, stage, scope)
        if form == "let":
            # a bound box holds code one stage up, which must still be runnable
            bindable = BASE_TYPES + ((BOX,) if stage < self.extra_stages else ())
            bound_ty = self.draw(st.sampled_from(bindable))
            name = self.name(bound_ty)
            bound = self.expr(bound_ty, d, stage, scope)
            body = self.expr(ty, d, stage, {**scope, name: (bound_ty, stage, ty != BOX)})
            return App(Fun(name, body), bound)
        if form == "if":
            return If(
                self.expr(BOOL, d, stage, scope),
                self.expr(ty, d, stage, scope),
                self.expr(ty, d, stage, scope),
            )
        if form == "app":
            param = self.name(NUM)
            body = self.expr(ty, d, stage, {**scope, param: (NUM, stage, ty != BOX)})
            return App(self.mark(Fun(param, body), 20), self.expr(NUM, d, stage, scope))
        if form == "mark":
            return self.mark(self.expr(ty, d, stage, scope), 100)
        if form == "run":
            code = self.mark(Box(self.expr(ty, d, stage + 1, scope)), 20)
            return Run(code)
        if form == "unbox":
            return Unbox(self.mark(Box(self.expr(ty, d, stage, scope)), 20))
        return getattr(self, f"{ty}_{form}")(d, stage, scope)

    def leaf(self, ty: str, stage: int, scope: Scope) -> Expr:
        names = self.variables(ty, stage, scope)
        if names and self.chance(40):
            return Var(self.draw(st.sampled_from(names)))
        if ty == NUM:
            return self.mark(Const.num(self.draw(st.integers(0, 9))), self.mark_percent)
        if ty == BOOL:
            return self.mark(Const.boolean(self.draw(st.booleans())), self.mark_percent)
        if ty == STR:
            text = self.draw(st.sampled_from(("a", "b", "number", "")))
            return self.mark(Const.string(text), self.mark_percent)
        if ty == REC:
            return self.record_literal(0, stage, scope)
        if ty == FUN:
            param = self.name(NUM)
            return Fun(param, self.leaf(NUM, stage, {**scope, param: (NUM, stage, True)}))
        return Box(self.leaf(NUM, stage + 1, scope))

    def record_literal(self, depth: int, stage: int, scope: Scope) -> Record:
        """``{"__proto__": ..., "a": num, "b": bool}``, ``"a"`` possibly inherited."""
        if depth > 0 and self.chance(30):
            parent: Expr = self.record_literal(depth - 1, stage, scope)
            fields: List[Tuple[str, Expr]] = [(PROTO, parent)]
        else:
            fields = [(PROTO, Const.null()), ("a", self.expr(NUM, depth - 1, stage, scope))]
        if self.chance(50):
            fields.append(("b", self.expr(BOOL, depth - 1, stage, scope)))
        return Record(tuple(fields))

    # type-specific forms

    def num_sub(self, d: int, stage: int, scope: Scope) -> Expr:
        return Prim(PrimOp.SUB, self.expr(NUM, d, stage, scope), self.expr(NUM, d, stage, scope))

    def num_read(self, d: int, stage: int, scope: Scope) -> Expr:
        selector = self.mark(Const.string("a"), self.mark_percent)
        return Read(self.expr(REC, d, stage, scope), selector)

    def num_call(self, d: int, stage: int, scope: Scope) -> Expr:
        return App(self.expr(FUN, d, stage, scope), self.expr(NUM, d, stage, scope))

    def num_runbox(self, d: int, stage: int, scope: Scope) -> Expr:
        return Run(self.expr(BOX, d, stage, scope))

    def bool_eq(self, d: int, stage: int, scope: Scope) -> Expr:
        ty = self.draw(st.sampled_from(BASE_TYPES))
        return Prim(PrimOp.EQ, self.expr(ty, d, stage, scope), self.expr(ty, d, stage, scope))

    def bool_typeof(self, d: int, stage: int, scope: Scope) -> Expr:
        ty = self.draw(st.sampled_from(BASE_TYPES))
        probe = Prim(PrimOp.TYPEOF, self.expr(ty, d, stage, scope))
        return Prim(PrimOp.EQ, probe, Const.string("number"))

    def str_typeof(self, d: int, stage: int, scope: Scope) -> Expr:
        ty = self.draw(st.sampled_from(BASE_TYPES + (FUN,)))
        return Prim(PrimOp.TYPEOF, self.expr(ty, d, stage, scope))

    def str_read(self, d: int, stage: int, scope: Scope) -> Expr:
        # reading a field that is never defined gives undef
        return Prim(PrimOp.TYPEOF, Read(self.expr(REC, d, stage, scope), Const.string("zz")))

    def rec_literal(self, d: int, stage: int, scope: Scope) -> Expr:
        return self.record_literal(d, stage, scope)

    def rec_write(self, d: int, stage: int, scope: Scope) -> Expr:
        field_name = self.draw(st.sampled_from(("a", "c")))
        selector = self.mark(Const.string(field_name), self.mark_percent)
        return Write(self.expr(REC, d, stage, scope), selector, self.expr(NUM, d, stage, scope))

    def rec_delete(self, d: int, stage: int, scope: Scope) -> Expr:
        return Delete(self.expr(REC, d, stage, scope), Const.string("b"))

    def fun_lambda(self, d: int, stage: int, scope: Scope) -> Expr:
        param = self.name(NUM)
        return Fun(param, self.expr(NUM, d, stage, {**scope, param: (NUM, stage, True)}))

    def box_quote(self, d: int, stage: int, scope: Scope) -> Expr:
        return Box(self.expr(NUM, d, stage + 1, scope))


_SPECIFIC: Dict[str, Tuple[str, ...]] = {
    NUM: ("sub", "read", "call", "runbox"),
    BOOL: ("eq", "typeof"),
    STR: ("typeof", "read"),
    REC: ("literal", "write", "delete"),
    FUN: ("lambda",),
    BOX: ("quote",),
}


@st.composite
def programs(
    draw,
    max_depth: int = 4,
    extra_stages: int = 2,
    markers: Sequence[str] = DEFAULT_MARKERS,
    mark_percent: int = 30,
    types: Sequence[str] = BASE_TYPES,
) -> Expr:
    """A labelled, terminating, stage-consistent program."""
    builder = _ProgramBuilder(draw, extra_stages, markers, mark_percent)
    ty = draw(st.sampled_from(tuple(types)))
    return number_labels(builder.expr(ty, max_depth, 0, {}))


def subterm_paths(e: Expr, path: Path = ()) -> List[Path]:
    """Paths of every proper subterm of ``e``."""
    found: List[Path] = []
    for index, sub in enumerate(e.subterms()):
        child = path + (index,)
        found.append(child)
        found.extend(subterm_paths(sub, child))
    return found


@st.composite
def programs_with_holes(draw, max_depth: int = 3, max_holes: int = 2):
    """A program together with subterm paths to replace by holes."""
    program = draw(programs(max_depth=max_depth))
    paths = subterm_paths(program)
    if not paths:
        return program, []
    chosen = draw(st.lists(st.sampled_from(paths), max_size=max_holes, unique=True))
    return program, chosen
