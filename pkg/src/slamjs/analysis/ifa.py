"""Static information-flow analysis over a solved 0CFA.

Flow edges are generated per program node from the abstract cache and
environment. A marker influences the result when its node reaches the
program's root label; direct and indirect edges are traversed alike and
only differ in how they are reported.
"""
import json
import logging
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

import networkx as nx

from ..semantics import DEFAULT_FUEL, Evaluator, Trace
from ..syntax import (
    App,
    Closure,
    Const,
    ConstKind,
    Delete,
    Expr,
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
    forget_labels,
    is_marker_constant_value,
    iter_nodes,
    map_expr,
    markers_of,
    strip_markers_shallow,
    unmark,
)
from .base import Variant
from .cfa import (
    GLOBAL,
    AbsKind,
    AbsVar,
    CFASolution,
    FieldVar,
    NameVar,
    solve,
    string_universe,
)

logger = logging.getLogger(__name__)


class FlowKind(str, Enum):
    DIRECT = "direct"
    INDIRECT = "indirect"


@dataclass(frozen=True)
class LabelNode:
    label: int

    def __str__(self) -> str:
        return str(self.label)


@dataclass(frozen=True)
class VarNode:
    var: AbsVar

    def __str__(self) -> str:
        return str(self.var)


@dataclass(frozen=True)
class MarkerNode:
    marker: str

    def __str__(self) -> str:
        return self.marker


FlowNode = Union[LabelNode, VarNode, MarkerNode]


@dataclass(frozen=True)
class FlowEdge:
    """``source`` flows into ``target``; ``origin`` is the node that demanded it."""

    source: FlowNode
    target: FlowNode
    kind: FlowKind
    origin: int

    def to_dict(self) -> Dict[str, Union[str, int]]:
        return {
            "src": str(self.source),
            "dst": str(self.target),
            "kind": self.kind.value,
            "origin": self.origin,
        }


class _EdgeBuilder:
    """Flow edges for every node of one program, given its CFA solution."""

    def __init__(self, solution: CFASolution):
        self.solution = solution
        self.edges: List[FlowEdge] = []
        self.seen: set = set()
        self.strings = string_universe(solution.program)

    def flow(self, source: FlowNode, target: FlowNode, origin: int, kind: FlowKind) -> None:
        edge = FlowEdge(source, target, kind, origin)
        if edge not in self.seen:
            self.seen.add(edge)
            self.edges.append(edge)

    def direct(self, source: FlowNode, target: FlowNode, origin: int) -> None:
        self.flow(source, target, origin, FlowKind.DIRECT)

    def indirect(self, source: FlowNode, target: FlowNode, origin: int) -> None:
        self.flow(source, target, origin, FlowKind.INDIRECT)

    def records_in(self, label: int) -> List[int]:
        return sorted(
            v.ref for v in self.solution.gamma(label) if v.kind is AbsKind.REC
        )

    def build(self) -> List[FlowEdge]:
        for node in iter_nodes(self.solution.program):
            self.node(node)
        return self.edges

    def node(self, e: Expr) -> None:
        label = e.label
        here = LabelNode(label)
        core = e.term if isinstance(e, Closure) else e
        if isinstance(core, Var):
            for var in self.sources(label, core.name):
                self.direct(VarNode(var), here, label)
        elif isinstance(core, App):
            fn, arg = core.fn.label, core.arg.label
            for f in sorted(self.solution.gamma(fn)):
                if f.kind is not AbsKind.FUN:
                    continue
                binder = f.site if self.solution.variant is Variant.IMPROVED else None
                self.direct(LabelNode(arg), VarNode(NameVar(f.param, binder)), label)
                self.direct(LabelNode(f.ref), here, label)
            self.indirect(LabelNode(fn), here, label)
        elif isinstance(core, If):
            self.direct(LabelNode(core.then.label), here, label)
            self.direct(LabelNode(core.orelse.label), here, label)
            self.indirect(LabelNode(core.cond.label), here, label)
        elif isinstance(core, Marked):
            self.direct(LabelNode(core.body.label), here, label)
            self.direct(MarkerNode(core.marker), here, label)
        elif isinstance(core, Read):
            for record in self.records_in(core.target.label):
                for holder in sorted(self.solution.proto(record)):
                    for name in self.strings:
                        self.direct(VarNode(FieldVar(holder, name)), here, label)
            self.indirect(LabelNode(core.target.label), here, label)
            self.indirect(LabelNode(core.selector.label), here, label)
        elif isinstance(core, Record):
            for record in self.records_in(label):
                for name, value in core.fields:
                    self.direct(
                        LabelNode(value.label), VarNode(FieldVar(record, name)), label
                    )
        elif isinstance(core, Write):
            target = core.target.label
            self.direct(LabelNode(target), here, label)
            for record in self.records_in(target):
                for name in self.strings:
                    self.direct(
                        LabelNode(core.value.label),
                        VarNode(FieldVar(record, name)),
                        label,
                    )
            self.indirect(LabelNode(core.selector.label), here, label)
        elif isinstance(core, Delete):
            self.direct(LabelNode(core.target.label), here, label)
            self.indirect(LabelNode(core.selector.label), here, label)
        elif isinstance(core, (Unbox, Run, RunIn)):
            operand = core.body.label
            for box in sorted(self.solution.gamma(operand)):
                if box.kind is AbsKind.BOX:
                    self.direct(LabelNode(box.ref), here, label)
            self.indirect(LabelNode(operand), here, label)
        elif isinstance(core, Prim):
            for operand in core.subterms():
                self.direct(LabelNode(operand.label), here, label)
        if isinstance(e, (Closure, RunIn)):
            for name, value in e.env.bindings:
                self.direct(LabelNode(value.label), VarNode(NameVar(name)), label)

    def sources(self, occurrence: int, name: str) -> List[NameVar]:
        if self.solution.variant is not Variant.IMPROVED:
            return [NameVar(name)]
        binders = self.solution.binders(occurrence)
        return [NameVar(name, b) for b in sorted(binders, key=lambda b: (b == GLOBAL, b))]


def gen_flow_constraints(solution: CFASolution) -> List[FlowEdge]:
    """The flow edges of ``solution.program``, in generation order, without repeats."""
    edges = _EdgeBuilder(solution).build()
    logger.debug(f"Generated {len(edges)} flow edges")
    return edges


class FlowGraph:
    """Directed flow graph with cached reachability.

    Every program label is a node even when no edge touches it.
    """

    def __init__(self, edges: Iterable[FlowEdge], labels: Iterable[int] = ()):
        self.edges: Tuple[FlowEdge, ...] = tuple(edges)
        self.graph = nx.DiGraph()
        self.graph.add_nodes_from(LabelNode(label) for label in labels)
        for edge in self.edges:
            if self.graph.has_edge(edge.source, edge.target):
                self.graph[edge.source][edge.target]["kinds"].add(edge.kind)
            else:
                self.graph.add_edge(edge.source, edge.target, kinds={edge.kind})
        self._upstream: Dict[FlowNode, FrozenSet[FlowNode]] = {}

    def upstream(self, node: FlowNode) -> FrozenSet[FlowNode]:
        """Every node with a path to ``node``."""
        if node not in self._upstream:
            if node in self.graph:
                self._upstream[node] = frozenset(nx.ancestors(self.graph, node))
            else:
                self._upstream[node] = frozenset()
        return self._upstream[node]

    def reaches(self, source: FlowNode, target: FlowNode) -> bool:
        return source == target or source in self.upstream(target)

    def markers(self) -> List[str]:
        return sorted(n.marker for n in self.graph if isinstance(n, MarkerNode))


def reachable_markers(graph: FlowGraph, root: int) -> FrozenSet[str]:
    """Markers with a path to label ``root``."""
    return frozenset(
        n.marker for n in graph.upstream(LabelNode(root)) if isinstance(n, MarkerNode)
    )


def format_markers(markers: Iterable[str]) -> str:
    return "{" + ", ".join(sorted(markers)) + "}"


@dataclass(frozen=True)
class DependencyReport:
    """Markers the result of a program may depend on, with the edges behind them."""

    root: int
    depends: FrozenSet[str]
    edges: Tuple[FlowEdge, ...]
    variant: Variant
    graph: FlowGraph = field(compare=False, repr=False)

    def format(self) -> str:
        return f"depends: {format_markers(self.depends)}"

    def flows_dict(self) -> Dict[str, List[Dict[str, Union[str, int]]]]:
        return {"edges": [edge.to_dict() for edge in self.edges]}

    def to_dict(self) -> Dict[str, object]:
        return {
            "variant": self.variant.value,
            "root": self.root,
            "depends": sorted(self.depends),
        }

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, ensure_ascii=False)

    def to_dot(self) -> str:
        """Graphviz rendering: direct flows solid, indirect flows dashed."""
        lines = ["digraph flows {"]
        for marker in sorted({str(e.source) for e in self.edges if isinstance(e.source, MarkerNode)}):
            lines.append(f'  "{marker}" [shape=box];')
        lines.append(f'  "{self.root}" [peripheries=2];')
        for edge in self.edges:
            style = "solid" if edge.kind is FlowKind.DIRECT else "dashed"
            lines.append(f'  "{edge.source}" -> "{edge.target}" [style={style}];')
        lines.append("}")
        return "\n".join(lines)


class FlowAnalysis:
    """Runs 0CFA, builds the flow graph and reports the root's dependencies."""

    def __init__(self, variant: Variant = Variant.SIMPLE):
        self.variant = Variant(variant)
        self.logger = logging.getLogger(__name__)

    def run(self, program: Expr) -> DependencyReport:
        solution = solve(program, self.variant)
        return self.report(solution)

    def report(self, solution: CFASolution) -> DependencyReport:
        program = solution.program
        edges = gen_flow_constraints(solution)
        graph = FlowGraph(edges, (n.label for n in iter_nodes(program)))
        depends = reachable_markers(graph, program.label)
        self.logger.info(
            f"{self.variant.value} analysis: {len(edges)} edges, "
            f"depends {format_markers(depends)}"
        )
        return DependencyReport(
            program.label, depends, graph.edges, self.variant, graph
        )


def analyze(program: Expr, variant: Variant = Variant.SIMPLE) -> DependencyReport:
    """Markers the result of ``program`` may depend on."""
    return FlowAnalysis(variant).run(program)


class Verdict(str, Enum):
    STATICALLY_SECURE = "StaticallySecure"
    POSSIBLY_INSECURE = "PossiblyInsecure"


@dataclass(frozen=True)
class NoninterferenceResult:
    """Static verdict plus the outcome of the differential runs."""

    verdict: Verdict
    high: FrozenSet[str]
    leaking: FrozenSet[str]
    trials: int
    compared: int
    skipped: int
    mismatches: int

    @property
    def holds(self) -> bool:
        """A secure verdict was never contradicted by a differential run."""
        return self.verdict is Verdict.POSSIBLY_INSECURE or self.mismatches == 0

    def format(self) -> str:
        lines = [f"verdict: {self.verdict.value}"]
        if self.leaking:
            lines.append(f"leaking: {format_markers(self.leaking)}")
        lines.append(
            f"differential: {self.compared}/{self.trials} compared, "
            f"{self.skipped} skipped, {self.mismatches} differing"
        )
        return "\n".join(lines)

    def to_dict(self) -> Dict[str, object]:
        return {
            "verdict": self.verdict.value,
            "high": sorted(self.high),
            "leaking": sorted(self.leaking),
            "trials": self.trials,
            "compared": self.compared,
            "skipped": self.skipped,
            "mismatches": self.mismatches,
        }


_STRING_POOL = ("", "a", "b", "x", "y")


def _replacement(const: Const, rng: random.Random) -> Const:
    """A random constant of the same type; ``null`` and ``undef`` stand in for each other."""
    if const.kind is ConstKind.NUM:
        return Const.num(rng.randint(0, 20), const.label)
    if const.kind is ConstKind.BOOL:
        return Const.boolean(rng.random() < 0.5, const.label)
    if const.kind is ConstKind.STR:
        return Const.string(rng.choice(_STRING_POOL), const.label)
    if rng.random() < 0.5:
        return Const.null(const.label)
    return Const.undef(const.label)


def vary_high_inputs(program: Expr, high: FrozenSet[str], rng: random.Random) -> Expr:
    """Replace each constant marked with a ``high`` marker by a random one of its type."""

    def walk(node: Expr) -> Expr:
        if isinstance(node, Marked) and node.marker in high:
            _, core = strip_markers_shallow(node)
            if isinstance(core, Const):
                return _rewrap(node, _replacement(core, rng))
        return map_expr(node, walk)

    return walk(program)


def _rewrap(node: Expr, const: Const) -> Expr:
    if isinstance(node, Marked):
        return Marked(node.marker, _rewrap(node.body, const), node.label)
    return const


def _observable(result: Optional[Expr]) -> Optional[Expr]:
    if result is None or not is_marker_constant_value(result):
        return None
    return forget_labels(unmark(result))


def check_noninterference(
    program: Expr,
    high: Iterable[str],
    trials: int = 50,
    variant: Variant = Variant.SIMPLE,
    seed: int = 0,
    fuel: int = DEFAULT_FUEL,
) -> NoninterferenceResult:
    """Static noninterference verdict for ``high``, checked by differential runs.

    The program is secure when no high marker reaches its root. Each trial
    evaluates a copy with the high-marked constants replaced and compares
    the unmarked results; a trial is skipped when either run does not end
    in a constant.
    """
    high_set = frozenset(high)
    report = analyze(program, variant)
    leaking = high_set & report.depends
    verdict = Verdict.POSSIBLY_INSECURE if leaking else Verdict.STATICALLY_SECURE
    evaluator = Evaluator(fuel)
    baseline = _observable(evaluator.run(program).result)
    rng = random.Random(seed)
    compared = skipped = mismatches = 0
    for _ in range(trials):
        varied = _observable(evaluator.run(vary_high_inputs(program, high_set, rng)).result)
        if baseline is None or varied is None:
            skipped += 1
            continue
        compared += 1
        if varied != baseline:
            mismatches += 1
    if skipped:
        logger.warning(f"Skipped {skipped} of {trials} differential runs")
    result = NoninterferenceResult(
        verdict, high_set, leaking, trials, compared, skipped, mismatches
    )
    if not result.holds:
        logger.warning(f"High inputs changed the result in {mismatches} runs")
    return result


def check_if_soundness(
    program: Expr,
    variant: Variant = Variant.SIMPLE,
    fuel: int = DEFAULT_FUEL,
    report: Optional[DependencyReport] = None,
) -> Optional[bool]:
    """Markers in a constant result are all predicted by the analysis.

    Returns ``None`` when the program does not evaluate to markers around a
    constant.
    """
    result = Evaluator(fuel).run(program).result
    if result is None or not is_marker_constant_value(result):
        return None
    if report is None:
        report = analyze(program, variant)
    missing = markers_of(result) - report.depends
    if missing:
        logger.debug(f"Result carries unpredicted markers {format_markers(missing)}")
    return not missing


def check_reduction_preservation(report: DependencyReport, trace: Trace) -> bool:
    """Whenever the top-level label changes, the new label flows into the old one."""
    labels = [e.label for e in trace.expressions()]
    for before, after in zip(labels, labels[1:]):
        if before != after and not report.graph.reaches(LabelNode(after), LabelNode(before)):
            logger.debug(f"Label {after} does not flow into {before}")
            return False
    return True
