"""Surface syntax for SLamJS: lark grammar, labelling and pretty-printing.

The concrete syntax is JavaScript-flavoured::

    let f = fun(x){ if ((H : x)) { 1 } else { 2 } } in f(true)

Markers are written ``(M : e)`` with a capitalised marker name. ``_``
(hole), ``(e, {x ↦ v})`` (closure) and ``run e in {x ↦ v}`` (run-in) are
intermediate forms and are only accepted with ``allow_intermediate``.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Tuple, Union

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import (
    UnexpectedCharacters,
    UnexpectedEOF,
    UnexpectedInput,
    UnexpectedToken,
    VisitError,
)

from .syntax import (
    App,
    Box,
    Closure,
    Const,
    ConstKind,
    Delete,
    Env,
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
    is_value,
    number_labels,
)

logger = logging.getLogger(__name__)

KEYWORDS = frozenset(
    {
        "let",
        "in",
        "fun",
        "if",
        "else",
        "box",
        "unbox",
        "run",
        "del",
        "typeof",
        "true",
        "false",
        "null",
        "undef",
    }
)

GRAMMAR = r"""
?start: expr

?expr: "let" NAME "=" expr "in" expr         -> let
     | postfix "=" expr                      -> assign
     | cmp

?cmp: sum "==" sum                           -> eq
    | sum

?sum: unary "-" unary                        -> sub
    | unary

?unary: "typeof" unary                       -> typeof
      | "box" unary                          -> box
      | "unbox" unary                        -> unbox
      | "run" unary "in" env                 -> run_in
      | "run" unary                          -> run
      | "del" postfix                        -> delete
      | postfix

?postfix: postfix "(" expr ")"               -> app
        | postfix "[" expr "]"               -> read
        | atom

?atom: NUMBER                                -> number
     | ESCAPED_STRING                        -> string
     | "true"                                -> true
     | "false"                               -> false
     | "null"                                -> null
     | "undef"                               -> undef
     | NAME                                  -> var
     | "_"                                   -> hole
     | "fun" "(" NAME ")" "{" expr "}"       -> fun
     | "if" "(" expr ")" "{" expr "}" "else" "{" expr "}" -> if_
     | "{" "}"                               -> empty_record
     | "{" field ("," field)* "}"            -> record
     | "(" MARKER ":" expr ")"               -> marked
     | "(" expr "," env ")"                  -> closure
     | "(" expr ")"

field: (ESCAPED_STRING | NAME) ":" expr

env: "{" "}"                                 -> empty_env
   | "{" binding ("," binding)* "}"

binding: NAME MAPSTO expr

MAPSTO: "↦" | "|->"
NAME: /[a-z_][A-Za-z0-9_]*/
MARKER: /[A-Z][A-Za-z0-9_]*/
NUMBER: /\d+(\.\d+)?([eE][+-]?\d+)?/
COMMENT: /\/\/[^\n]*/

%import common.ESCAPED_STRING
%import common.WS
%ignore WS
%ignore COMMENT
"""


class SlamjsParseError(ValueError):
    """Raised when source text is not a well-formed SLamJS program."""

    def __init__(self, diagnostics: List["ParseDiagnostic"]):
        self.diagnostics = diagnostics
        summary = "; ".join(str(d) for d in diagnostics)
        super().__init__(summary)


@dataclass(frozen=True)
class SourceProgram:
    """Program text together with where it came from."""

    text: str
    origin: str = "<stdin>"

    @classmethod
    def from_path(cls, path: Union[str, Path]) -> "SourceProgram":
        path = Path(path)
        return cls(path.read_text(encoding="utf-8"), str(path))


@dataclass(frozen=True)
class ParseDiagnostic:
    line: int
    column: int
    message: str
    severity: str = "error"
    origin: str = field(default="<stdin>", compare=False)

    def __str__(self) -> str:
        return f"{self.origin}:{self.line}:{self.column}: {self.severity}: {self.message}"


class _Reject(Exception):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(message)
        self.line = line
        self.column = column
        self.message = message


def _position(meta) -> Tuple[int, int]:
    if getattr(meta, "empty", True):
        return 1, 1
    return meta.line, meta.column


class _ToExpr(Transformer):
    """Builds unlabelled expressions from the parse tree."""

    def __init__(self, allow_intermediate: bool):
        super().__init__()
        self.allow_intermediate = allow_intermediate

    def _intermediate(self, meta, what: str) -> None:
        if not self.allow_intermediate:
            line, column = _position(meta)
            raise _Reject(
                line, column, f"{what} is an intermediate form and is not allowed here"
            )

    def let(self, children):
        name, bound, body = children
        return App(Fun(str(name), body), bound)

    @v_args(meta=True)
    def assign(self, meta, children):
        target, value = children
        if not isinstance(target, Read):
            line, column = _position(meta)
            raise _Reject(line, column, "left side of '=' must be a field read e[s]")
        return Write(target.target, target.selector, value)

    def eq(self, children):
        return Prim(PrimOp.EQ, children[0], children[1])

    def sub(self, children):
        return Prim(PrimOp.SUB, children[0], children[1])

    def typeof(self, children):
        return Prim(PrimOp.TYPEOF, children[0])

    def box(self, children):
        return Box(children[0])

    def unbox(self, children):
        return Unbox(children[0])

    def run(self, children):
        return Run(children[0])

    @v_args(meta=True)
    def run_in(self, meta, children):
        self._intermediate(meta, "run-in")
        return RunIn(children[0], children[1])

    @v_args(meta=True)
    def delete(self, meta, children):
        target = children[0]
        if not isinstance(target, Read):
            line, column = _position(meta)
            raise _Reject(line, column, "operand of 'del' must be a field read e[s]")
        return Delete(target.target, target.selector)

    def app(self, children):
        return App(children[0], children[1])

    def read(self, children):
        return Read(children[0], children[1])

    def number(self, children):
        return Const.num(float(children[0]))

    @v_args(meta=True)
    def string(self, meta, children):
        return Const.string(_decode_string(children[0], meta))

    def true(self, children):
        return Const.boolean(True)

    def false(self, children):
        return Const.boolean(False)

    def null(self, children):
        return Const.null()

    def undef(self, children):
        return Const(ConstKind.UNDEF)

    def var(self, children):
        return Var(str(children[0]))

    @v_args(meta=True)
    def hole(self, meta, children):
        self._intermediate(meta, "hole '_'")
        return Hole()

    def fun(self, children):
        return Fun(str(children[0]), children[1])

    def if_(self, children):
        return If(children[0], children[1], children[2])

    def empty_record(self, children):
        return Record(())

    @v_args(meta=True)
    def record(self, meta, children):
        names = [name for name, _ in children]
        for index, name in enumerate(names):
            if name in names[:index]:
                line, column = _position(meta)
                raise _Reject(line, column, f"duplicate record field {name!r}")
        return Record(tuple(children))

    @v_args(meta=True)
    def field(self, meta, children):
        key, value = children
        if key.type == "ESCAPED_STRING":
            return _decode_string(key, meta), value
        return str(key), value

    def marked(self, children):
        return Marked(str(children[0]), children[1])

    @v_args(meta=True)
    def closure(self, meta, children):
        self._intermediate(meta, "closure")
        return Closure(children[0], children[1])

    def empty_env(self, children):
        return Env()

    def env(self, children):
        env = Env()
        for name, value in children:
            env = env.extend(name, value)
        return env

    @v_args(meta=True)
    def binding(self, meta, children):
        name, _, value = children
        if not is_value(value, 0):
            line, column = _position(meta)
            raise _Reject(line, column, f"binding for {name} is not a stage-0 value")
        return str(name), value


def _decode_string(token: Token, meta) -> str:
    try:
        return json.loads(str(token))
    except ValueError as e:
        line, column = _position(meta)
        raise _Reject(line, column, f"invalid string literal {token}: {e}") from e


_LARK = Lark(GRAMMAR, parser="earley", lexer="basic", propagate_positions=True)


def _end_position(text: str) -> Tuple[int, int]:
    lines = text.split("\n")
    return len(lines), len(lines[-1]) + 1


def _diagnose(error: UnexpectedInput, src: SourceProgram) -> ParseDiagnostic:
    if isinstance(error, UnexpectedEOF) or (
        isinstance(error, UnexpectedToken) and error.token.type == "$END"
    ):
        line, column = _end_position(src.text)
        return ParseDiagnostic(line, column, "unexpected end of input", origin=src.origin)
    if isinstance(error, UnexpectedToken):
        token = error.token
        if str(token) in KEYWORDS:
            message = f"reserved word {str(token)!r} cannot be used here"
        else:
            expected = ", ".join(sorted(error.expected)) if error.expected else "?"
            message = f"unexpected {str(token)!r}, expected one of: {expected}"
        return ParseDiagnostic(error.line, error.column, message, origin=src.origin)
    if isinstance(error, UnexpectedCharacters):
        message = f"unexpected character {src.text[error.pos_in_stream]!r}"
        return ParseDiagnostic(error.line, error.column, message, origin=src.origin)
    return ParseDiagnostic(
        getattr(error, "line", 1), getattr(error, "column", 1), str(error), origin=src.origin
    )


def parse(
    src: Union[SourceProgram, str], allow_intermediate: bool = False
) -> Expr:
    """Parse and label a program.

    Args:
        src: Program text, or a plain string treated as ``<stdin>``.
        allow_intermediate: Accept closures, run-in and holes.

    Returns:
        The program with labels ``0..n-1`` in left-to-right post-order.

    Raises:
        SlamjsParseError: The text is malformed. ``diagnostics`` holds the
            positions and messages.
    """
    if isinstance(src, str):
        src = SourceProgram(src)
    try:
        tree = _LARK.parse(src.text)
        expr = _ToExpr(allow_intermediate).transform(tree)
    except UnexpectedInput as e:
        raise SlamjsParseError([_diagnose(e, src)]) from e
    except VisitError as e:
        orig = e.orig_exc
        if isinstance(orig, _Reject):
            diagnostic = ParseDiagnostic(
                orig.line, orig.column, orig.message, origin=src.origin
            )
            raise SlamjsParseError([diagnostic]) from orig
        raise
    labelled = number_labels(expr)
    logger.debug(f"Parsed {src.origin}: root label {labelled.label}")
    return labelled


def try_parse(
    src: Union[SourceProgram, str], allow_intermediate: bool = False
) -> Union[Expr, List[ParseDiagnostic]]:
    """Like :func:`parse` but returns diagnostics instead of raising."""
    try:
        return parse(src, allow_intermediate)
    except SlamjsParseError as e:
        return e.diagnostics


# Precedence levels, loosest first.
EXPR, CMP, SUM, UNARY, POSTFIX, ATOM = range(6)


def format_number(value: float) -> str:
    if value != value or value in (float("inf"), float("-inf")):
        return repr(value)
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def format_const(c: Const) -> str:
    if c.kind is ConstKind.NUM:
        return format_number(float(c.value))  # type: ignore[arg-type]
    if c.kind is ConstKind.STR:
        return json.dumps(c.value, ensure_ascii=False)
    if c.kind is ConstKind.BOOL:
        return "true" if c.value else "false"
    return c.kind.value


class _Printer:
    def __init__(self, show_labels: bool, show_envs: bool):
        self.show_labels = show_labels
        self.show_envs = show_envs

    def show(self, e: Expr, need: int = EXPR) -> str:
        text, level = self.raw(e)
        if self.show_labels:
            if level < ATOM:
                text = f"({text})"
            text, level = f"{text}@{e.label}", ATOM
        if level < need:
            return f"({text})"
        return text

    def env(self, env: Env) -> str:
        if not len(env):
            return "{}"
        if not self.show_envs:
            return "{…}"
        inner = ", ".join(f"{name}↦{self.show(v)}" for name, v in env.bindings)
        return "{" + inner + "}"

    def raw(self, e: Expr) -> Tuple[str, int]:
        if isinstance(e, Const):
            return format_const(e), ATOM
        if isinstance(e, Var):
            return e.name, ATOM
        if isinstance(e, Hole):
            return "_", ATOM
        if isinstance(e, Record):
            if not e.fields:
                return "{}", ATOM
            inner = ", ".join(
                f"{json.dumps(name, ensure_ascii=False)}: {self.show(v)}"
                for name, v in e.fields
            )
            return "{" + inner + "}", ATOM
        if isinstance(e, Fun):
            return f"fun({e.param}){{{self.show(e.body)}}}", ATOM
        if isinstance(e, If):
            return (
                f"if ({self.show(e.cond)}) {{ {self.show(e.then)} }} "
                f"else {{ {self.show(e.orelse)} }}",
                ATOM,
            )
        if isinstance(e, Marked):
            return f"({e.marker} : {self.show(e.body)})", ATOM
        if isinstance(e, Closure):
            term, _ = self.raw(e.term)
            return f"({term}, {self.env(e.env)})", ATOM
        if isinstance(e, App):
            return f"{self.show(e.fn, POSTFIX)}({self.show(e.arg)})", POSTFIX
        if isinstance(e, Read):
            return f"{self.show(e.target, POSTFIX)}[{self.show(e.selector)}]", POSTFIX
        if isinstance(e, Box):
            return f"box {self.show(e.body, UNARY)}", UNARY
        if isinstance(e, Unbox):
            return f"unbox {self.show(e.body, UNARY)}", UNARY
        if isinstance(e, Run):
            return f"run {self.show(e.body, UNARY)}", UNARY
        if isinstance(e, RunIn):
            return f"run {self.show(e.body, UNARY)} in {self.env(e.env)}", UNARY
        if isinstance(e, Delete):
            target = self.show(e.target, POSTFIX)
            return f"del {target}[{self.show(e.selector)}]", UNARY
        if isinstance(e, Write):
            target = self.show(e.target, POSTFIX)
            return (
                f"{target}[{self.show(e.selector)}] = {self.show(e.value)}",
                EXPR,
            )
        if isinstance(e, Prim):
            if e.op is PrimOp.TYPEOF:
                return f"typeof {self.show(e.left, UNARY)}", UNARY
            assert e.right is not None
            if e.op is PrimOp.EQ:
                return f"{self.show(e.left, SUM)} == {self.show(e.right, SUM)}", CMP
            return f"{self.show(e.left, UNARY)} - {self.show(e.right, UNARY)}", SUM
        raise TypeError(f"cannot print {type(e).__name__}")


def pretty(e: Expr, show_labels: bool = False, show_envs: bool = False) -> str:
    """Render ``e`` in surface syntax.

    Without labels or intermediate forms the output parses back to ``e``
    up to label renumbering. ``show_labels`` appends ``@label`` to every
    node; ``show_envs`` prints environment contents instead of ``{…}``.
    """
    return _Printer(show_labels, show_envs).show(e)
