"""
Analysis reports.

Every command fills one ``AnalysisReport``; the text shown on standard
output and the JSON written with ``--json`` are both rendered from it.
Witness lists are kept in canonical order so that repeated runs on the
same inputs give identical reports apart from ``generated_at``.
"""

import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Union

from .equivalence import ConsequenceReport, EquivalenceReport
from .errors import Issue
from .model import ProtoAlgorithm, format_value, value_key
from .modelio import model_digest, write_text_atomic
from .schema import AnalysisReport, ModelDigest, create_empty_report
from .semantics import ComputedFunction, DivergenceVerdict, Run, StateGraph, output_value
from .transform import SequentializationResult

VOLATILE_FIELDS = ("generated_at",)


def model_entry(model: ProtoAlgorithm) -> ModelDigest:
    return {"name": model.name or "<unnamed>", "sha256": model_digest(model)}


def add_models(report: AnalysisReport, models: Iterable[ProtoAlgorithm]) -> None:
    """Record the digests of ``models`` and copy their warnings into the diagnostics."""
    for model in models:
        report["models"].append(model_entry(model))
        report["diagnostics"]["warnings"].extend(w.render() for w in model.warnings)


def new_report(command: List[str], models: Iterable[ProtoAlgorithm] = ()) -> AnalysisReport:
    """Start a report for ``command`` over ``models``."""
    report = create_empty_report(command)
    add_models(report, models)
    return report


def issue_entry(issue: Issue) -> Dict[str, Any]:
    entry: Dict[str, Any] = {"code": issue.code, "message": issue.message}
    if issue.position is not None:
        entry["position"] = issue.position
    if issue.witness is not None:
        entry["witness"] = _plain(issue.witness)
    return entry


def add_issues(report: AnalysisReport, issues: Iterable[Issue]) -> None:
    report["diagnostics"]["errors"].extend(issue_entry(issue) for issue in issues)


def _plain(value: Any) -> Any:
    """JSON-safe rendering of witnesses, BOT spelled as its token."""
    if isinstance(value, (bool, int, str)) or value is None:
        return value
    if isinstance(value, Mapping):
        return {format_value(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        items = [_plain(v) for v in value]
        return sorted(items, key=str) if isinstance(value, (set, frozenset)) else items
    if hasattr(value, "render"):
        return value.render()
    return format_value(value)


def run_entry(run: Run) -> Dict[str, Any]:
    entry: Dict[str, Any] = {
        "terminal": run.terminal.value,
        "steps": run.steps,
        "states": run.render(),
        "output": output_value(run),
    }
    if run.loop_start is not None:
        entry["loop_start"] = run.loop_start
    return entry


def state_graph_results(graph: StateGraph) -> Dict[str, Any]:
    return {"variant": graph.variant.value, "summary": graph.summary()}


def runs_results(runs: List[Run]) -> Dict[str, Any]:
    counts: Dict[str, int] = {}
    for run in runs:
        counts[run.terminal.value] = counts.get(run.terminal.value, 0) + 1
    return {"count": len(runs), "by_terminal": dict(sorted(counts.items()))}


def function_results(function: ComputedFunction) -> Dict[str, Any]:
    """Per-input definedness and output sets of a computed function."""
    table: Dict[str, Any] = {}
    for d_i in sorted(function.entries, key=value_key):
        entry = function[d_i]
        table[format_value(d_i)] = {
            "defined": entry.defined,
            "outputs": entry.sorted_outputs(),
            "reason": entry.reason,
        }
    return {"function": table, "total": function.is_total()}


def add_function_diagnostics(report: AnalysisReport, function: ComputedFunction) -> None:
    diagnostics = report["diagnostics"]
    for d_i in sorted(function.entries, key=value_key):
        entry = function[d_i]
        if entry.witness is not None:
            diagnostics["lassos"].append({"input": d_i, **run_entry(entry.witness)})
        diagnostics["stuck"].extend(s.render() for s in entry.stuck)


def add_divergence_diagnostics(report: AnalysisReport, verdict: DivergenceVerdict) -> None:
    if verdict.witness is not None:
        report["diagnostics"]["lassos"].append({"input": verdict.d_i, **run_entry(verdict.witness)})
    report["diagnostics"]["stuck"].extend(s.render() for s in verdict.stuck)


def _translation(mapping: Mapping[Any, Any]) -> Dict[str, Any]:
    return {format_value(k): v for k, v in sorted(mapping.items(), key=lambda kv: value_key(kv[0]))}


def equivalence_results(result: EquivalenceReport) -> Dict[str, Any]:
    entry: Dict[str, Any] = {
        "kind": result.kind,
        "verdict": result.verdict,
        "variant": None if result.variant is None else result.variant.value,
        "gamma_i": _translation(result.gamma_i),
        "gamma_o": _translation(result.gamma_o),
    }
    if result.relation is not None:
        entry["relation_size"] = len(result.relation)
    return entry


def equivalence_witnesses(result: EquivalenceReport) -> Dict[str, Any]:
    witnesses: Dict[str, Any] = {}
    if result.relation is not None and result.verdict:
        pairs = result.relation.sorted_pairs()
        witnesses["relation"] = [[s.render(), t.render()] for s, t in pairs]
    if result.isomorphism is not None:
        witnesses["isomorphism"] = result.isomorphism.as_dict()
    return witnesses


def consequence_results(consequences: ConsequenceReport) -> Dict[str, Any]:
    return {
        "holds": consequences.holds,
        "definedness": consequences.definedness,
        "outputs": consequences.outputs,
        "run_lengths": consequences.run_lengths,
        "exact_gamma_o": consequences.exact_gamma_o,
    }


def sequentialization_results(
    result: SequentializationResult, output_path: Optional[str]
) -> Dict[str, Any]:
    graph = result.output.main_component
    return {
        "output": output_path,
        "output_model": model_entry(result.output),
        "vertices": len(graph.vertices),
        "edges": len(graph.edges),
        "data": len(result.data_map),
        "certified": result.certificate is not None and result.certificate.verdict,
    }


def comparable(report: AnalysisReport) -> Dict[str, Any]:
    """The report without fields that differ between identical runs."""
    return {k: v for k, v in report.items() if k not in VOLATILE_FIELDS}


def report_json(report: AnalysisReport) -> str:
    return json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_report(report: AnalysisReport, path: Union[str, Path]) -> None:
    """Write the machine-readable report atomically."""
    write_text_atomic(path, report_json(report))


def _lines(prefix: str, value: Any) -> List[str]:
    if isinstance(value, Mapping):
        if not value:
            return [f"{prefix}: {{}}"]
        lines = [f"{prefix}:"]
        for key, item in value.items():
            lines.extend("  " + line for line in _lines(str(key), item))
        return lines
    if isinstance(value, list) and value and isinstance(value[0], (Mapping, list)):
        lines = [f"{prefix}:"]
        for index, item in enumerate(value):
            lines.extend("  " + line for line in _lines(f"[{index}]", item))
        return lines
    if isinstance(value, list):
        return [f"{prefix}: [{', '.join(map(str, value))}]"]
    return [f"{prefix}: {value}"]


def render_text(report: AnalysisReport) -> str:
    """Human-readable rendering: verdict first, then results, then diagnostics."""
    lines = [f"command: {' '.join(report['command'])}"]
    for digest in report["models"]:
        lines.append(f"model: {digest['name']} ({digest['sha256'][:12]})")
    if report["verdict"] is not None:
        lines.append(f"verdict: {'holds' if report['verdict'] else 'fails'}")
    for key, value in report["results"].items():
        lines.extend(_lines(key, value))
    diagnostics = {k: v for k, v in report["diagnostics"].items() if v}
    if diagnostics:
        lines.extend(_lines("diagnostics", diagnostics))
    if report["resources"]:
        lines.extend(_lines("resources", report["resources"]))
    lines.append(f"exit code: {report['exit_code']}")
    return "\n".join(lines) + "\n"
