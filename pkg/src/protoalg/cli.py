#!/usr/bin/env python
"""
Command-line interface for protoalg.

Each subcommand loads one or two model documents, runs one analysis and
reports the result as text on standard output and, with ``--json``, as a
machine-readable report. Exit codes: 0 success or property holds,
1 property fails, 2 invalid model, 3 resource bound exceeded, 4 usage error.
"""

import argparse
import logging
import sys
from typing import Callable, Dict, List, NoReturn, Optional, Tuple

from .config import DEFAULT_MAX_RUNS, DEFAULT_MAX_STEPS, get_state_cap
from .dot import export_dot
from .equivalence import (
    check_equivalence,
    check_isomorphism_report,
    check_simulation,
    verify_isomorphism,
    verify_simulation_consequences,
)
from .errors import (
    CertificationFailed,
    ModelParseError,
    ModelValidationError,
    NotASimulation,
    ResourceBoundExceeded,
    SequentializationError,
    UsageError,
)
from .fixtures import countdown, handoff, load_document
from .model import BottomPolicy, ProtoAlgorithm, ValidationLevel, Value, format_value
from .modelio import load_model, save_model, serialize_model, write_text_atomic
from .report import (
    add_divergence_diagnostics,
    add_function_diagnostics,
    add_issues,
    add_models,
    consequence_results,
    equivalence_results,
    equivalence_witnesses,
    function_results,
    model_entry,
    new_report,
    render_text,
    run_entry,
    runs_results,
    sequentialization_results,
    state_graph_results,
    write_report,
)
from .schema import AnalysisReport
from .semantics import (
    Variant,
    build_state_graph,
    computed_function,
    divergence_analysis,
    enumerate_runs,
)
from .transform import sequentialize

EXIT_OK = 0
EXIT_PROPERTY_FAILS = 1
EXIT_INVALID_MODEL = 2
EXIT_RESOURCE_BOUND = 3
EXIT_USAGE = 4

GENERATORS = {"countdown": countdown, "handoff": handoff}

logger = logging.getLogger("protoalg")


class _ArgumentParser(argparse.ArgumentParser):
    """Argument parser reporting mistakes as ``UsageError`` instead of exiting."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(message)


def setup_logging(verbose: bool = False) -> None:
    """
    Set up logging configuration.

    Args:
        verbose: If True, set log level to DEBUG
    """
    log_level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=log_level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[logging.StreamHandler()],
    )


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if value <= 0:
        raise argparse.ArgumentTypeError(f"{text!r} is not positive")
    return value


def parse_args(args: Optional[List[str]] = None) -> argparse.Namespace:
    """
    Parse command-line arguments.

    Args:
        args: Command line arguments (defaults to sys.argv[1:])

    Returns:
        Parsed arguments

    Raises:
        UsageError: When the arguments do not form a valid command
    """
    common = _ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", help="Enable verbose output", action="store_true")
    common.add_argument(
        "--json", metavar="PATH", help="Also write the machine-readable report to PATH"
    )
    common.add_argument(
        "--state-cap",
        type=_positive_int,
        help="Bound on explored states (default: $PROTOALG_STATE_CAP or 1000000)",
    )

    loading = _ArgumentParser(add_help=False)
    loading.add_argument(
        "--level",
        choices=[level.value for level in ValidationLevel],
        default=ValidationLevel.STRICT.value,
        help="Validation level (default: strict)",
    )
    loading.add_argument(
        "--bottom-policy",
        choices=[policy.value for policy in BottomPolicy],
        help="Override the document's bottom policy",
    )

    variant = _ArgumentParser(add_help=False)
    variant.add_argument(
        "--variant",
        choices=[v.value for v in Variant],
        default=Variant.ALGORITHMIC.value,
        help="Step semantics (default: algorithmic)",
    )

    parser = _ArgumentParser(
        prog="protoalg",
        description="Validate, execute, compare and sequentialize concurrent proto-algorithms",
    )
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True

    sub = commands.add_parser(
        "validate", parents=[common, loading], help="Validate a model document"
    )
    sub.add_argument("model", help="Model document")

    sub = commands.add_parser(
        "run", parents=[common, loading, variant], help="Enumerate the runs from one input"
    )
    sub.add_argument("model", help="Model document")
    sub.add_argument("--input", required=True, help="Input value token")
    sub.add_argument("--max-steps", type=_positive_int, default=DEFAULT_MAX_STEPS)
    sub.add_argument("--max-runs", type=_positive_int, default=DEFAULT_MAX_RUNS)

    sub = commands.add_parser(
        "compute", parents=[common, loading], help="Compute the model's function"
    )
    sub.add_argument("model", help="Model document")
    sub.add_argument("--input", help="Only this input value token")

    sub = commands.add_parser("check-iso", parents=[common, loading], help="Decide isomorphism")
    sub.add_argument("left", help="First model document")
    sub.add_argument("right", help="Second model document")

    for name, help_text in (
        ("check-sim", "Decide whether LEFT is simulated by RIGHT"),
        ("check-equiv", "Decide algorithmic or computational equivalence"),
    ):
        sub = commands.add_parser(name, parents=[common, loading, variant], help=help_text)
        sub.add_argument("left", help="First model document")
        sub.add_argument("right", help="Second model document")

    sub = commands.add_parser(
        "sequentialize", parents=[common, loading], help="Compile into a sequential model"
    )
    sub.add_argument("model", help="Model document")
    sub.add_argument("-o", "--output", required=True, help="Output model document")
    sub.add_argument(
        "--certify", action="store_true", help="Check the result's equivalence to the source"
    )

    sub = commands.add_parser(
        "export-dot", parents=[common, loading, variant], help="Export GraphViz DOT"
    )
    sub.add_argument("model", help="Model document")
    sub.add_argument("--state-graph", action="store_true", help="Export a state graph")
    sub.add_argument("--input", help="Input value token for --state-graph")
    sub.add_argument("-o", "--output", required=True, help="Output DOT file")

    sub = commands.add_parser(
        "gen", parents=[common], help="Generate a parameterized example model"
    )
    sub.add_argument("family", choices=sorted(GENERATORS))
    sub.add_argument("size", type=int, help="Loop bound (countdown) or worker count (handoff)")
    sub.add_argument("-o", "--output", required=True, help="Output model document")

    return parser.parse_args(args)


def _load(path: str, parsed: argparse.Namespace) -> ProtoAlgorithm:
    policy = BottomPolicy(parsed.bottom_policy) if parsed.bottom_policy else None
    try:
        return load_model(path, ValidationLevel(parsed.level), policy)
    except FileNotFoundError:
        raise UsageError(f"model file does not exist: {path}") from None


def _input_value(model: ProtoAlgorithm, token: str) -> Value:
    for d_i in model.interpretation.input_domain:
        if format_value(d_i) == token:
            return d_i
    raise UsageError(f"{token!r} is not in the input domain of {model.name or 'the model'}")


def _validate(parsed: argparse.Namespace, report: AnalysisReport) -> int:
    model = _load(parsed.model, parsed)
    add_models(report, [model])
    interp = model.interpretation
    report["results"]["model"] = {
        **model.classifiers(),
        "bottom_policy": interp.bottom_policy.value,
        "level": model.level.value,
        "vertices": [len(g.vertices) for g in model.components],
        "domain_sizes": {
            "main": len(interp.main_domain),
            "input": len(interp.input_domain),
            "output": len(interp.output_domain),
        },
    }
    logger.info(f"{parsed.model} is well formed")
    return EXIT_OK


def _run(parsed: argparse.Namespace, report: AnalysisReport) -> int:
    model = _load(parsed.model, parsed)
    add_models(report, [model])
    d_i = _input_value(model, parsed.input)
    runs = enumerate_runs(model, d_i, Variant(parsed.variant), parsed.max_steps, parsed.max_runs)
    report["results"]["runs"] = runs_results(runs)
    report["witnesses"]["runs"] = [run_entry(run) for run in runs]
    add_divergence_diagnostics(report, divergence_analysis(model, d_i, parsed.state_cap))
    return EXIT_OK


def _compute(parsed: argparse.Namespace, report: AnalysisReport) -> int:
    model = _load(parsed.model, parsed)
    add_models(report, [model])
    inputs = None if parsed.input is None else [_input_value(model, parsed.input)]
    function = computed_function(model, parsed.state_cap, inputs)
    report["results"].update(function_results(function))
    add_function_diagnostics(report, function)
    return EXIT_OK


def _check_iso(parsed: argparse.Namespace, report: AnalysisReport) -> int:
    left, right = _load(parsed.left, parsed), _load(parsed.right, parsed)
    add_models(report, [left, right])
    result = check_isomorphism_report(left, right, parsed.state_cap)
    if result.isomorphism is not None:
        problems = verify_isomorphism(left, right, result.isomorphism)
        if problems:
            add_issues(report, problems)
            raise NotASimulation("isomorphism witness failed re-verification", problems)
    report["verdict"] = result.verdict
    report["results"]["isomorphism"] = equivalence_results(result)
    report["witnesses"].update(equivalence_witnesses(result))
    return EXIT_OK if result.verdict else EXIT_PROPERTY_FAILS


def _check_sim(parsed: argparse.Namespace, report: AnalysisReport) -> int:
    left, right = _load(parsed.left, parsed), _load(parsed.right, parsed)
    add_models(report, [left, right])
    result = check_simulation(left, right, Variant(parsed.variant), parsed.state_cap)
    report["verdict"] = result.verdict
    report["results"]["simulation"] = equivalence_results(result)
    report["witnesses"].update(equivalence_witnesses(result))
    add_issues(report, result.failures)
    if result.verdict and result.relation is not None:
        consequences = verify_simulation_consequences(
            left, right, result.relation, cap=parsed.state_cap
        )
        report["results"]["consequences"] = consequence_results(consequences)
        add_issues(report, consequences.violations)
    return EXIT_OK if result.verdict else EXIT_PROPERTY_FAILS


def _check_equiv(parsed: argparse.Namespace, report: AnalysisReport) -> int:
    left, right = _load(parsed.left, parsed), _load(parsed.right, parsed)
    add_models(report, [left, right])
    result = check_equivalence(left, right, Variant(parsed.variant), parsed.state_cap)
    report["verdict"] = result.verdict
    report["results"]["equivalence"] = equivalence_results(result)
    report["witnesses"].update(equivalence_witnesses(result))
    add_issues(report, result.failures)
    return EXIT_OK if result.verdict else EXIT_PROPERTY_FAILS


def _sequentialize(parsed: argparse.Namespace, report: AnalysisReport) -> int:
    model = _load(parsed.model, parsed)
    add_models(report, [model])
    result = sequentialize(model, certify=parsed.certify, cap=parsed.state_cap)
    save_model(result.output, parsed.output)
    report["results"]["sequentialization"] = sequentialization_results(result, parsed.output)
    if result.certificate is not None:
        report["verdict"] = result.certificate.verdict
        report["witnesses"]["certificate"] = {
            "verdict": result.certificate.verdict,
            **equivalence_witnesses(result.certificate),
        }
    return EXIT_OK


def _export_dot(parsed: argparse.Namespace, report: AnalysisReport) -> int:
    model = _load(parsed.model, parsed)
    add_models(report, [model])
    if parsed.state_graph:
        if parsed.input is None:
            raise UsageError("--state-graph needs --input")
        graph = build_state_graph(
            model, Variant(parsed.variant), [_input_value(model, parsed.input)], parsed.state_cap
        )
        report["results"]["state_graph"] = state_graph_results(graph)
        report["diagnostics"]["stuck"].extend(s.render() for s in graph.stuck)
        text = export_dot(graph)
    else:
        if parsed.input is not None:
            raise UsageError("--input only applies to --state-graph")
        text = export_dot(model)
    write_text_atomic(parsed.output, text)
    report["results"]["output"] = parsed.output
    logger.info(f"DOT written to {parsed.output}")
    return EXIT_OK


def _gen(parsed: argparse.Namespace, report: AnalysisReport) -> int:
    try:
        document = GENERATORS[parsed.family](parsed.size)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    model = load_document(document)
    write_text_atomic(parsed.output, serialize_model(model))
    report["models"].append(model_entry(model))
    report["results"]["output"] = parsed.output
    logger.info(f"{parsed.family} model written to {parsed.output}")
    return EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace, AnalysisReport], int]] = {
    "validate": _validate,
    "run": _run,
    "compute": _compute,
    "check-iso": _check_iso,
    "check-sim": _check_sim,
    "check-equiv": _check_equiv,
    "sequentialize": _sequentialize,
    "export-dot": _export_dot,
    "gen": _gen,
}


def _execute(parsed: argparse.Namespace, report: AnalysisReport) -> int:
    try:
        if parsed.state_cap is None:
            parsed.state_cap = get_state_cap()
        report["resources"]["state_cap"] = parsed.state_cap
        return COMMANDS[parsed.command](parsed, report)
    except (ModelParseError, ModelValidationError) as e:
        add_issues(report, e.issues)
        for issue in e.issues:
            logger.error(issue.render())
        return EXIT_INVALID_MODEL
    except SequentializationError as e:
        logger.error(f"Cannot sequentialize: {e}", exc_info=parsed.verbose)
        return EXIT_INVALID_MODEL
    except ResourceBoundExceeded as e:
        report["resources"]["exceeded"] = {"what": e.what, "cap": e.cap}
        logger.error(f"Resource bound exceeded: {e}", exc_info=parsed.verbose)
        return EXIT_RESOURCE_BOUND
    except (CertificationFailed, NotASimulation) as e:
        logger.error(f"Witness check failed: {e}", exc_info=parsed.verbose)
        report["verdict"] = False
        return EXIT_PROPERTY_FAILS


def run_cli(argv: Optional[List[str]] = None) -> Tuple[int, Optional[AnalysisReport]]:
    """
    Run one command and emit its reports.

    Args:
        argv: Command line arguments (defaults to sys.argv[1:])

    Returns:
        The exit code and the report; the report is None on usage errors
        detected before a command started
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        parsed = parse_args(argv)
    except UsageError as e:
        setup_logging()
        logger.error(f"Usage error: {e}")
        return EXIT_USAGE, None
    setup_logging(parsed.verbose)

    report = new_report(argv)
    try:
        code = _execute(parsed, report)
    except UsageError as e:
        logger.error(f"Usage error: {e}")
        code = EXIT_USAGE
    report["exit_code"] = code
    sys.stdout.write(render_text(report))
    if parsed.json:
        write_report(report, parsed.json)
    return code, report


def main(args: Optional[List[str]] = None) -> int:
    """
    Main entry point for the CLI.

    Args:
        args: Command line arguments (defaults to sys.argv[1:])

    Returns:
        Exit code (see the module documentation)
    """
    code, _ = run_cli(args)
    return code


if __name__ == "__main__":
    sys.exit(main())
