import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

from . import __version__
from .analysis import AnalysisError, FlowAnalysis, Variant, check_noninterference, solve
from .config import ConfigError, FlowFormat, RunConfig, VariantSelection, load_config
from .harness import CORPUS, CorpusError, CorpusRunner, PropertyRunner, get_case
from .parser import SlamjsParseError, SourceProgram, parse, pretty
from .semantics import Evaluator, FuelExhausted, Stuck, Trace
from .syntax import Expr

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_STUCK = 2
EXIT_FUEL = 3

EPILOG = """exit codes:
  0  value reached / check passed
  1  parse or configuration error, corpus or property failure
  2  evaluation stuck
  3  step budget exhausted
"""


def setup_logging(verbose: bool = False) -> None:
    """Configure logging on stderr"""
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )


def emit_json(data: object) -> None:
    print(json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False))


def load_program(path: Path) -> Expr:
    """Read and parse a program file; ``-`` reads stdin."""
    if str(path) == "-":
        source = SourceProgram(sys.stdin.read())
    else:
        source = SourceProgram.from_path(path)
    return parse(source)


def _variants(args: argparse.Namespace, config: RunConfig) -> List[Variant]:
    selection = args.variant or config.analysis.variant
    return VariantSelection(selection).variants()


def _print_trace(trace: Trace, as_json: bool) -> None:
    if as_json:
        for line in trace.to_json_lines():
            print(line)
        return
    for index, step in enumerate(trace.steps, start=1):
        print(f"{index:>5}  {step.rule.value:<14} @{step.stage}  {pretty(step.expr)}")


def cmd_eval(args: argparse.Namespace, config: RunConfig) -> int:
    program = load_program(args.file)
    fuel = args.max_steps if args.max_steps is not None else config.eval.fuel
    trace = Evaluator(fuel).run(program)
    if args.trace or config.eval.trace:
        _print_trace(trace, config.json_output)
    final = trace.final
    steps = len(trace.steps)
    if isinstance(final, Stuck):
        message = f"stuck: {final.reason.value} at label {final.focus}"
        if final.detail:
            message += f" ({final.detail})"
        if config.json_output:
            emit_json(
                {
                    "outcome": "stuck",
                    "reason": final.reason.value,
                    "focus": final.focus,
                    "detail": final.detail,
                    "steps": steps,
                }
            )
        else:
            print(message)
        return EXIT_STUCK
    if isinstance(final, FuelExhausted):
        if config.json_output:
            emit_json({"outcome": "fuel-exhausted", "steps": final.steps})
        else:
            print(f"fuel exhausted after {final.steps} steps")
        return EXIT_FUEL
    value = pretty(trace.result)
    if config.json_output:
        emit_json({"outcome": "value", "value": value, "steps": steps})
    else:
        print(value)
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace, config: RunConfig) -> int:
    program = load_program(args.file)
    dump_cfa = args.dump_cfa or config.analysis.dump_cfa
    dump_flows = args.dump_flows or config.analysis.dump_flows
    variants = _variants(args, config)
    reports: List[Dict[str, object]] = []
    for variant in variants:
        solution = solve(program, variant)
        report = FlowAnalysis(variant).report(solution)
        if config.json_output:
            entry = report.to_dict()
            if dump_cfa:
                entry["cfa"] = solution.to_dict()
            if dump_flows == FlowFormat.JSON:
                entry["flows"] = report.flows_dict()["edges"]
            elif dump_flows == FlowFormat.DOT:
                entry["dot"] = report.to_dot()
            reports.append(entry)
            continue
        prefix = f"{variant.value}: " if len(variants) > 1 else ""
        print(f"{prefix}{report.format()}")
        if dump_cfa:
            print(solution.to_json())
        if dump_flows == FlowFormat.JSON:
            print(json.dumps(report.flows_dict(), indent=2, ensure_ascii=False))
        elif dump_flows == FlowFormat.DOT:
            print(report.to_dot())
    if config.json_output:
        emit_json({"reports": reports})
    return EXIT_OK


def cmd_depends(args: argparse.Namespace, config: RunConfig) -> int:
    program = load_program(args.file)
    high = sorted({m.strip() for item in args.high for m in item.split(",") if m.strip()})
    trials = args.trials if args.trials is not None else config.properties.trials
    code = EXIT_OK
    outputs: List[Dict[str, object]] = []
    for variant in _variants(args, config):
        result = check_noninterference(
            program,
            high,
            trials=trials,
            variant=variant,
            seed=config.properties.seed,
            fuel=config.eval.fuel,
        )
        if not result.holds:
            logger.error(f"{variant.value}: differential runs contradict the secure verdict")
            code = EXIT_FAILURE
        if config.json_output:
            outputs.append({"variant": variant.value, **result.to_dict()})
        else:
            print(f"[{variant.value}]")
            print(result.format())
    if config.json_output:
        emit_json({"results": outputs})
    return code


def cmd_corpus(args: argparse.Namespace, config: RunConfig) -> int:
    cases = [get_case(case_id) for case_id in args.case] if args.case else list(CORPUS)
    workers = args.workers if args.workers is not None else config.workers
    runner = CorpusRunner(fuel=config.eval.fuel, workers=workers)
    summary = runner.run(cases, _variants(args, config))
    if config.json_output:
        emit_json(summary.to_dict())
    else:
        print(summary.format_table())
    if not summary.passed:
        logger.error(f"{len(summary.failures)} corpus checks failed")
        return EXIT_FAILURE
    return EXIT_OK


def cmd_proptest(args: argparse.Namespace, config: RunConfig) -> int:
    props = config.properties
    # SLAMJS_SEED is already folded into the config and beats --seed
    if args.seed is not None and "SLAMJS_SEED" not in os.environ:
        seed = args.seed
    else:
        seed = props.seed
    runner = PropertyRunner(
        cases=args.cases if args.cases is not None else props.cases,
        seed=seed,
        max_depth=args.max_depth if args.max_depth is not None else props.max_depth,
        extra_stages=props.extra_stages,
        fuel=props.fuel,
    )
    report = runner.run()
    if config.json_output:
        emit_json(report.to_dict())
    else:
        print(report.format())
    return EXIT_OK if report.passed else EXIT_FAILURE


COMMANDS: Dict[str, Callable[[argparse.Namespace, RunConfig], int]] = {
    "eval": cmd_eval,
    "analyze": cmd_analyze,
    "depends": cmd_depends,
    "corpus": cmd_corpus,
    "proptest": cmd_proptest,
}


def build_parser() -> argparse.ArgumentParser:
    # shared flags are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        type=Path,
        default=argparse.SUPPRESS,
        help="Path to YAML configuration file"
    )
    common.add_argument(
        "--json",
        action="store_true",
        default=argparse.SUPPRESS,
        help="Emit machine-readable JSON on stdout"
    )
    common.add_argument(
        "--verbose",
        action="store_true",
        default=argparse.SUPPRESS,
        help="Enable verbose logging"
    )

    parser = argparse.ArgumentParser(
        prog="slamjs",
        description="Evaluate and analyse SLamJS programs",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        parents=[common],
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    variant_choices = [v.value for v in VariantSelection]

    p_eval = sub.add_parser("eval", parents=[common], help="Evaluate a program")
    p_eval.add_argument("file", type=Path, help="Program file, or - for stdin")
    p_eval.add_argument("--trace", action="store_true", help="Print every step and its rule")
    p_eval.add_argument("--max-steps", type=int, help="Step budget (default: eval.fuel)")

    p_analyze = sub.add_parser("analyze", parents=[common], help="Report marker dependencies")
    p_analyze.add_argument("file", type=Path, help="Program file, or - for stdin")
    p_analyze.add_argument("--variant", choices=variant_choices, help="0CFA variant")
    p_analyze.add_argument("--dump-cfa", action="store_true", help="Print the solved 0CFA")
    p_analyze.add_argument(
        "--dump-flows",
        choices=[f.value for f in FlowFormat],
        help="Print the flow edges"
    )

    p_depends = sub.add_parser(
        "depends", parents=[common], help="Check noninterference for high markers"
    )
    p_depends.add_argument("file", type=Path, help="Program file, or - for stdin")
    p_depends.add_argument(
        "--high",
        action="append",
        required=True,
        help="High marker name; repeat or separate with commas"
    )
    p_depends.add_argument("--trials", type=int, help="Differential runs (default: properties.trials)")
    p_depends.add_argument("--variant", choices=variant_choices, help="0CFA variant")

    p_corpus = sub.add_parser("corpus", parents=[common], help="Run the reference corpus")
    p_corpus.add_argument("--variant", choices=variant_choices, help="0CFA variant")
    p_corpus.add_argument("--case", action="append", help="Run only this case id; repeatable")
    p_corpus.add_argument("--workers", type=int, help="Thread pool size")

    p_prop = sub.add_parser("proptest", parents=[common], help="Check properties on random programs")
    p_prop.add_argument("--seed", type=int, help="Generator seed (SLAMJS_SEED wins)")
    p_prop.add_argument("--cases", type=int, help="Number of programs")
    p_prop.add_argument("--max-depth", type=int, help="Depth bound of generated programs")
    return parser


def main(argv: Optional[List[str]] = None) -> None:
    parser = build_parser()
    args = parser.parse_args(argv)

    # Setup logging
    setup_logging(getattr(args, "verbose", False))

    # Load configuration
    try:
        config = load_config(getattr(args, "config", None))
    except ConfigError as e:
        logger.error(str(e))
        sys.exit(EXIT_FAILURE)
    if getattr(args, "json", False):
        config = config.model_copy(update={"json_output": True})

    try:
        code = COMMANDS[args.command](args, config)
    except SlamjsParseError as e:
        for diagnostic in e.diagnostics:
            logger.error(str(diagnostic))
        code = EXIT_FAILURE
    except OSError as e:
        logger.error(f"Failed to read program: {e}")
        code = EXIT_FAILURE
    except (AnalysisError, CorpusError) as e:
        logger.error(str(e))
        code = EXIT_FAILURE
    sys.exit(code)


if __name__ == '__main__':
    main()
