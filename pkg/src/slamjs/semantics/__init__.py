"""Small-step semantics: evaluator, primitives and metatheory checks."""
from .checks import (
    check_determinism,
    check_monotonicity,
    check_simulation,
    check_stability,
    check_stage_monotonicity,
    check_step_stability,
    check_trace_determinism,
)
from .evaluator import (
    DEFAULT_FUEL,
    Decomposition,
    Evaluator,
    FuelExhausted,
    NoRedex,
    Rule,
    Stepped,
    Stuck,
    StuckReason,
    Trace,
    Value,
    decompose,
    eval_full,
    step,
)
from .primitives import PrimitiveFault, eval_prim

__all__ = [
    "DEFAULT_FUEL",
    "Decomposition",
    "Evaluator",
    "FuelExhausted",
    "NoRedex",
    "PrimitiveFault",
    "Rule",
    "Stepped",
    "Stuck",
    "StuckReason",
    "Trace",
    "Value",
    "check_determinism",
    "check_monotonicity",
    "check_simulation",
    "check_stability",
    "check_stage_monotonicity",
    "check_step_stability",
    "check_trace_determinism",
    "decompose",
    "eval_full",
    "eval_prim",
    "step",
]
