"""0CFA and information-flow analyses."""
from .base import AnalysisError, Variant
from .cfa import (
    AbsKind,
    AbsVal,
    CFASolution,
    CFASolver,
    FieldVar,
    NameVar,
    abstract_const,
    check_acceptable,
    check_result_soundness,
    gen_cfa_constraints,
    proto_closure,
    solve,
)
from .ifa import (
    DependencyReport,
    FlowAnalysis,
    FlowEdge,
    FlowGraph,
    FlowKind,
    NoninterferenceResult,
    Verdict,
    analyze,
    check_if_soundness,
    check_noninterference,
    check_reduction_preservation,
    gen_flow_constraints,
    reachable_markers,
)

__all__ = [
    "AbsKind",
    "AbsVal",
    "AnalysisError",
    "CFASolution",
    "CFASolver",
    "DependencyReport",
    "FieldVar",
    "FlowAnalysis",
    "FlowEdge",
    "FlowGraph",
    "FlowKind",
    "NameVar",
    "NoninterferenceResult",
    "Variant",
    "Verdict",
    "abstract_const",
    "analyze",
    "check_acceptable",
    "check_if_soundness",
    "check_noninterference",
    "check_reduction_preservation",
    "check_result_soundness",
    "gen_cfa_constraints",
    "gen_flow_constraints",
    "proto_closure",
    "reachable_markers",
    "solve",
]
