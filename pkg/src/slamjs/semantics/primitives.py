"""Primitive operators: ``==``, ``-`` and ``typeof``."""
from typing import Optional

from ..syntax import Box, Closure, Const, ConstKind, Expr, Fun, PrimOp, Record


class PrimitiveFault(ValueError):
    """Operands of a primitive have the wrong type."""


_TYPEOF_CONST = {
    ConstKind.UNDEF: "undefined",
    ConstKind.NULL: "null",
    ConstKind.BOOL: "boolean",
    ConstKind.NUM: "number",
    ConstKind.STR: "string",
}


def type_name(value: Expr) -> str:
    if isinstance(value, Const):
        return _TYPEOF_CONST[value.kind]
    if isinstance(value, Record):
        return "object"
    if isinstance(value, Closure) and isinstance(value.term, Fun):
        return "function"
    if isinstance(value, Box):
        return "box"
    raise PrimitiveFault(f"typeof applied to non-value {type(value).__name__}")


def values_equal(left: Expr, right: Expr) -> bool:
    """Constants compare by kind and value; anything else compares false."""
    if isinstance(left, Const) and isinstance(right, Const):
        return left.kind is right.kind and left.value == right.value
    return False


def eval_prim(op: PrimOp, left: Expr, right: Optional[Expr] = None) -> Const:
    """Apply ``op`` to marker-free stage-0 values.

    Raises:
        PrimitiveFault: ``-`` on non-numbers, or a binary operator missing
            its right operand.
    """
    if op is PrimOp.TYPEOF:
        return Const.string(type_name(left))
    if right is None:
        raise PrimitiveFault(f"{op.value} needs two operands")
    if op is PrimOp.EQ:
        return Const.boolean(values_equal(left, right))
    if (
        isinstance(left, Const)
        and isinstance(right, Const)
        and left.kind is ConstKind.NUM
        and right.kind is ConstKind.NUM
    ):
        return Const.num(float(left.value) - float(right.value))  # type: ignore[arg-type]
    raise PrimitiveFault(
        f"'-' expects numbers, got {type_name(left)} and {type_name(right)}"
    )
