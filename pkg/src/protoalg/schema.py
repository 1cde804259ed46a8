"""
Document Schemas

This module defines the JSON shapes of model documents and analysis
reports. Model documents are what users write and what ``serialize_model``
emits; analysis reports are what the command line writes with ``--json``.
"""

from datetime import datetime, timezone
from typing import Any, Dict, List, Optional, TypedDict, Union

MODEL_FORMAT = "protoalg-model"
REPORT_FORMAT = "protoalg-report"

TableCell = Union[int, str]
UnaryTable = Dict[str, TableCell]
BinaryTable = Dict[str, Dict[str, TableCell]]


class AlphabetBlock(TypedDict, total=False):
    """Four disjoint symbol groups."""

    processing: List[str]
    setting: List[str]
    getting: List[str]
    predicate: List[str]


class DomainsBlock(TypedDict):
    """Declared value lists; their order is the canonical order."""

    main: List[TableCell]
    input: List[TableCell]
    output: List[TableCell]


class InterpretationBlock(TypedDict):
    """Bottom policy and one table per symbol; BOT is spelled "_bot"."""

    bottom_policy: str  # 'strict' or 'lifted'
    tables: Dict[str, Union[UnaryTable, BinaryTable]]


class VertexEntry(TypedDict):
    id: str
    label: str


class EdgeEntry(TypedDict, total=False):
    source: str
    target: str
    label: int  # 0 or 1, predicate out-edges only


class ComponentEntry(TypedDict, total=False):
    """One component graph."""

    name: str
    main: bool
    nondeterministic: bool
    root: str
    vertices: List[VertexEntry]
    edges: List[EdgeEntry]


class ProvenanceBlock(TypedDict, total=False):
    source: str
    construction: str
    version: str


class ModelDocument(TypedDict, total=False):
    """Complete model document."""

    format: str
    version: int
    name: str
    alphabet: AlphabetBlock
    domains: DomainsBlock
    interpretation: InterpretationBlock
    components: List[ComponentEntry]
    provenance: ProvenanceBlock


class ModelDigest(TypedDict):
    name: str
    sha256: str


class Diagnostics(TypedDict, total=False):
    """Non-verdict findings: warnings, stuck states, divergence lassos."""

    warnings: List[str]
    errors: List[Dict[str, Any]]
    stuck: List[str]
    lassos: List[Dict[str, Any]]


class AnalysisReport(TypedDict, total=False):
    """Machine-readable result of one command."""

    format: str
    schemaVersion: str
    generated_at: str  # ISO format date string, excluded from comparisons
    command: List[str]
    models: List[ModelDigest]
    verdict: Optional[bool]
    exit_code: int
    results: Dict[str, Any]
    witnesses: Dict[str, Any]
    diagnostics: Diagnostics
    resources: Dict[str, Any]


def validate_report(data: Union[AnalysisReport, Dict[str, Any]]) -> bool:
    """
    Validate that the provided data conforms to the AnalysisReport schema.

    Args:
        data: Dictionary containing report data

    Returns:
        bool: True if valid, False otherwise
    """
    required = ("format", "schemaVersion", "command", "models", "verdict", "exit_code")
    if any(key not in data for key in required):
        return False
    if data["format"] != REPORT_FORMAT:
        return False
    return isinstance(data["command"], list) and isinstance(data["models"], list)


def create_empty_report(command: List[str]) -> AnalysisReport:
    """
    Create an empty report with required fields.

    Returns:
        AnalysisReport: Empty report for ``command``
    """
    return {
        "format": REPORT_FORMAT,
        "schemaVersion": schema_version(),
        "generated_at": datetime.now(timezone.utc).isoformat(),
        "command": list(command),
        "models": [],
        "verdict": None,
        "exit_code": 0,
        "results": {},
        "witnesses": {},
        "diagnostics": {"warnings": [], "errors": [], "stuck": [], "lassos": []},
        "resources": {},
    }


def schema_version() -> str:
    """Return the current schema version."""
    return "1.0.0"
