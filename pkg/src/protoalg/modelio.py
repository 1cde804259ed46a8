"""
Reading and writing model documents.

Parsing turns JSON text into raw model structures carrying a JSON-path
position on every element; serialization emits the canonical form, which
is stable across parse/serialize round trips.
"""

import hashlib
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

from .errors import Issue, ModelParseError
from .model import (
    BOT,
    BOT_TOKEN,
    FIN,
    INI,
    BottomPolicy,
    ProtoAlgorithm,
    RawAlphabet,
    RawComponentGraph,
    RawEdge,
    RawInterpretation,
    RawModel,
    RawVertex,
    ValidationLevel,
    format_value,
    validate_model,
)
from .schema import MODEL_FORMAT, ComponentEntry, ModelDocument

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

_TOP_LEVEL = (
    "format",
    "version",
    "name",
    "alphabet",
    "domains",
    "interpretation",
    "components",
    "provenance",
)
_ALPHABET_KEYS = ("processing", "setting", "getting", "predicate")
_DOMAIN_KEYS = ("main", "input", "output")
_COMPONENT_KEYS = ("name", "main", "nondeterministic", "root", "vertices", "edges")


class _Collector:
    """Accumulates parse issues so one pass reports all of them."""

    def __init__(self) -> None:
        self.issues: List[Issue] = []

    def add(self, code: str, message: str, position: str, witness: Any = None) -> None:
        self.issues.append(Issue(code, message, position, witness))

    def expect(self, value: Any, kind: type, what: str, position: str) -> bool:
        if isinstance(value, kind) and not (kind is int and isinstance(value, bool)):
            return True
        self.add("InvalidField", f"{what} must be a {kind.__name__}", position, value)
        return False

    def unknown_fields(
        self, block: Mapping[str, Any], allowed: Tuple[str, ...], position: str
    ) -> None:
        for key in block:
            if key not in allowed:
                self.add("UnknownField", f"unknown field {key!r}", f"{position}.{key}", key)


def _reject_duplicates(pairs: List[Tuple[str, Any]]) -> Dict[str, Any]:
    result: Dict[str, Any] = {}
    for key, value in pairs:
        if key in result:
            raise ValueError(f"duplicate key {key!r}")
        result[key] = value
    return result


def parse_model_text(text: str, source: Optional[str] = None) -> RawModel:
    """
    Parse a model document from text.

    Args:
        text: JSON document text
        source: File name used as the model name when the document has none

    Returns:
        The raw model, positions filled in

    Raises:
        ModelParseError: On syntax errors or structural problems, all reported
    """
    try:
        document = json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        raise ModelParseError(
            [Issue("SyntaxError", exc.msg, f"{exc.lineno}:{exc.colno}")]
        ) from None
    except ValueError as exc:
        raise ModelParseError([Issue("DuplicateKey", str(exc), "$")]) from None
    return parse_document(document, source)


def parse_model(path: Union[str, Path]) -> RawModel:
    """Parse the model document at ``path``."""
    path = Path(path)
    logger.debug("parsing model %s", path)
    return parse_model_text(path.read_text(encoding="utf-8"), path.stem)


def _token_map(values: List[Any]) -> Dict[str, Any]:
    return {format_value(v): v for v in values}


def parse_document(document: Any, source: Optional[str] = None) -> RawModel:
    """
    Turn an already-decoded document into raw model structures.

    Table keys and cells are resolved against the domain their symbol's
    signature names; a token outside that domain is an ``UndeclaredValue``.
    """
    issues = _Collector()
    if not isinstance(document, dict):
        raise ModelParseError([Issue("InvalidField", "document must be an object", "$")])
    issues.unknown_fields(document, _TOP_LEVEL, "$")
    for key in ("alphabet", "domains", "interpretation", "components"):
        if key not in document:
            issues.add("MissingField", f"missing field {key!r}", f"$.{key}", key)
    if document.get("format", MODEL_FORMAT) != MODEL_FORMAT:
        issues.add(
            "InvalidField", f"format must be {MODEL_FORMAT!r}", "$.format", document.get("format")
        )
    if issues.issues:
        raise ModelParseError(issues.issues)

    alphabet = _parse_alphabet(document["alphabet"], issues)
    domains = _parse_domains(document["domains"], issues)
    components = _parse_components(document["components"], issues)
    interpretation = _parse_interpretation(document["interpretation"], alphabet, domains, issues)
    name = document.get("name", source)
    if name is not None and not isinstance(name, str):
        issues.add("InvalidField", "name must be a string", "$.name", name)
    provenance = document.get("provenance")
    if provenance is not None and not isinstance(provenance, dict):
        issues.add("InvalidField", "provenance must be an object", "$.provenance")
    if issues.issues:
        raise ModelParseError(issues.issues)
    return RawModel(
        alphabet=alphabet,
        components=components,
        interpretation=interpretation,
        name=name,
        provenance=provenance,
    )


def _parse_alphabet(block: Any, issues: _Collector) -> RawAlphabet:
    groups: Dict[str, List[str]] = {key: [] for key in _ALPHABET_KEYS}
    if not issues.expect(block, dict, "alphabet", "$.alphabet"):
        return RawAlphabet(**groups, position="$.alphabet")
    issues.unknown_fields(block, _ALPHABET_KEYS, "$.alphabet")
    for key in _ALPHABET_KEYS:
        names = block.get(key, [])
        if issues.expect(names, list, f"alphabet.{key}", f"$.alphabet.{key}"):
            groups[key] = list(names)
    return RawAlphabet(**groups, position="$.alphabet")


def _parse_domains(block: Any, issues: _Collector) -> Dict[str, List[Any]]:
    domains: Dict[str, List[Any]] = {key: [] for key in _DOMAIN_KEYS}
    if not issues.expect(block, dict, "domains", "$.domains"):
        return domains
    issues.unknown_fields(block, _DOMAIN_KEYS, "$.domains")
    for key in _DOMAIN_KEYS:
        position = f"$.domains.{key}"
        if key not in block:
            issues.add("MissingField", f"missing domain {key!r}", position, key)
        elif issues.expect(block[key], list, f"domains.{key}", position):
            domains[key] = list(block[key])
    return domains


def _parse_components(block: Any, issues: _Collector) -> List[RawComponentGraph]:
    components: List[RawComponentGraph] = []
    if not issues.expect(block, list, "components", "$.components"):
        return components
    for index, entry in enumerate(block):
        position = f"$.components[{index}]"
        if not issues.expect(entry, dict, "component", position):
            continue
        issues.unknown_fields(entry, _COMPONENT_KEYS, position)
        if "root" not in entry:
            issues.add("MissingField", "missing field 'root'", f"{position}.root", "root")
        vertices: List[RawVertex] = []
        seen = set()
        for v_index, vertex in enumerate(entry.get("vertices", [])):
            v_position = f"{position}.vertices[{v_index}]"
            if not issues.expect(vertex, dict, "vertex", v_position):
                continue
            issues.unknown_fields(vertex, ("id", "label"), v_position)
            vertex_id, label = vertex.get("id"), vertex.get("label")
            if not isinstance(vertex_id, str) or not isinstance(label, str):
                issues.add("InvalidField", "vertex needs string 'id' and 'label'", v_position)
                continue
            if vertex_id in seen:
                issues.add(
                    "DuplicateId", f"vertex id {vertex_id!r} declared twice", v_position, vertex_id
                )
                continue
            seen.add(vertex_id)
            vertices.append(RawVertex(vertex_id, label, v_position))
        edges: List[RawEdge] = []
        for e_index, edge in enumerate(entry.get("edges", [])):
            e_position = f"{position}.edges[{e_index}]"
            if not issues.expect(edge, dict, "edge", e_position):
                continue
            issues.unknown_fields(edge, ("source", "target", "label"), e_position)
            source, target = edge.get("source"), edge.get("target")
            if not isinstance(source, str) or not isinstance(target, str):
                issues.add("InvalidField", "edge needs string 'source' and 'target'", e_position)
                continue
            edges.append(RawEdge(source, target, edge.get("label"), e_position))
        components.append(
            RawComponentGraph(
                vertices=vertices,
                edges=edges,
                root=str(entry.get("root", "")),
                main=entry.get("main"),
                nondeterministic=bool(entry.get("nondeterministic", False)),
                name=entry.get("name"),
                position=position,
            )
        )
    return components


def _parse_interpretation(
    block: Any, alphabet: RawAlphabet, domains: Dict[str, List[Any]], issues: _Collector
) -> RawInterpretation:
    interpretation = RawInterpretation(
        main_domain=domains["main"],
        input_domain=domains["input"],
        output_domain=domains["output"],
        tables={},
        position="$",
    )
    if not issues.expect(block, dict, "interpretation", "$.interpretation"):
        return interpretation
    issues.unknown_fields(block, ("bottom_policy", "tables"), "$.interpretation")
    policy = block.get("bottom_policy", BottomPolicy.LIFTED.value)
    try:
        interpretation.bottom_policy = BottomPolicy(policy)
    except ValueError:
        issues.add(
            "InvalidField",
            "bottom_policy must be 'strict' or 'lifted'",
            "$.interpretation.bottom_policy",
            policy,
        )
    tables = block.get("tables", {})
    if not issues.expect(tables, dict, "tables", "$.interpretation.tables"):
        return interpretation

    main = _token_map(domains["main"])
    main[BOT_TOKEN] = BOT
    inputs = _token_map(domains["input"])
    outputs = _token_map(domains["output"])
    binary = set(alphabet.setting) | set(alphabet.getting)
    for symbol, rows in tables.items():
        position = f"$.interpretation.tables.{symbol}"
        if symbol == INI:
            arguments, results = inputs, main
        elif symbol == FIN:
            arguments, results = main, outputs
        elif symbol in alphabet.predicate:
            arguments, results = main, {"0": 0, "1": 1, BOT_TOKEN: BOT}
        elif symbol in binary or symbol in alphabet.processing:
            arguments, results = main, main
        else:
            # not a symbol: leave for the validator to report
            interpretation.tables[symbol] = rows
            continue
        if not issues.expect(rows, dict, f"table {symbol!r}", position):
            continue
        if symbol in binary:
            table: Dict[Any, Any] = {}
            for first, inner in rows.items():
                key = _resolve(first, arguments, position, issues)
                row_position = f"{position}.{first}"
                if not issues.expect(inner, dict, f"row {first!r} of {symbol!r}", row_position):
                    continue
                table[key] = {
                    _resolve(second, arguments, f"{position}.{first}", issues): _resolve(
                        cell, results, f"{position}.{first}.{second}", issues
                    )
                    for second, cell in inner.items()
                }
        else:
            table = {
                _resolve(key, arguments, position, issues): _resolve(
                    cell, results, f"{position}.{key}", issues
                )
                for key, cell in rows.items()
            }
        interpretation.tables[symbol] = table
    return interpretation


def _resolve(token: Any, values: Mapping[str, Any], position: str, issues: _Collector) -> Any:
    if isinstance(token, bool) or not isinstance(token, (int, str)):
        issues.add("UndeclaredValue", f"{token!r} is not a value token", position, token)
        return token
    text = str(token)
    if text not in values:
        issues.add("UndeclaredValue", f"value {text!r} is outside its domain", position, token)
        return token
    return values[text]


def _cell(value: Any) -> Any:
    return BOT_TOKEN if value is BOT else value


def model_to_document(model: ProtoAlgorithm) -> ModelDocument:
    """
    Canonical document of a validated model.

    Structural keys are sorted, alphabet groups are sorted, table rows follow
    declared domain order with the BOT row last.
    """
    interp = model.interpretation
    alphabet = model.alphabet
    binary = alphabet.setting | alphabet.getting

    def rows(symbol: str) -> List[Any]:
        domain: List[Any] = list(interp.input_domain if symbol == INI else interp.main_domain)
        if interp.lifted and symbol != INI:
            domain.append(BOT)
        return domain

    tables: Dict[str, Any] = {}
    for symbol in sorted(alphabet.all_symbols):
        table = interp.tables[symbol]
        if symbol in binary:
            tables[symbol] = {
                format_value(d): {format_value(e): _cell(table[(d, e)]) for e in rows(symbol)}
                for d in rows(symbol)
            }
        else:
            tables[symbol] = {format_value(d): _cell(table[d]) for d in rows(symbol)}

    components: List[ComponentEntry] = []
    for graph in model.components:
        edges = []
        for source, target, label in graph.edges:
            edge: Dict[str, Any] = {"source": source, "target": target}
            if label is not None:
                edge["label"] = label
            edges.append(dict(sorted(edge.items())))
        entry: Dict[str, Any] = {
            "edges": edges,
            "main": graph.is_main,
            "nondeterministic": graph.nondet_allowed,
            "root": graph.root,
            "vertices": [{"id": v, "label": graph.label(v)} for v in graph.vertices],
        }
        if graph.name is not None:
            entry["name"] = graph.name
        components.append(dict(sorted(entry.items())))  # type: ignore[arg-type]

    document: Dict[str, Any] = {
        "alphabet": {
            "getting": sorted(alphabet.getting),
            "predicate": sorted(alphabet.predicate),
            "processing": sorted(alphabet.processing),
            "setting": sorted(alphabet.setting),
        },
        "components": components,
        "domains": {
            "input": list(interp.input_domain),
            "main": list(interp.main_domain),
            "output": list(interp.output_domain),
        },
        "format": MODEL_FORMAT,
        "interpretation": {"bottom_policy": interp.bottom_policy.value, "tables": tables},
        "version": FORMAT_VERSION,
    }
    if model.name is not None:
        document["name"] = model.name
    if model.provenance is not None:
        document["provenance"] = json.loads(json.dumps(model.provenance, sort_keys=True))
    return dict(sorted(document.items()))  # type: ignore[return-value]


def serialize_model(model: ProtoAlgorithm) -> str:
    """Canonical document text; identical bytes for identical models."""
    return json.dumps(model_to_document(model), indent=2, ensure_ascii=False) + "\n"


def model_digest(model: ProtoAlgorithm) -> str:
    """SHA-256 of the canonical serialization."""
    return hashlib.sha256(serialize_model(model).encode("utf-8")).hexdigest()


def load_model(
    path: Union[str, Path],
    level: ValidationLevel = ValidationLevel.STRICT,
    bottom_policy: Optional[BottomPolicy] = None,
) -> ProtoAlgorithm:
    """
    Parse and validate the model at ``path``.

    Raises:
        ModelParseError: When the document cannot be parsed
        ModelValidationError: When the model is not well formed
    """
    model = validate_model(parse_model(path), level, bottom_policy)
    for warning in model.warnings:
        logger.warning("%s: %s", path, warning.render())
    return model


def write_text_atomic(path: Union[str, Path], text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    directory.mkdir(parents=True, exist_ok=True)
    handle, temp_name = tempfile.mkstemp(dir=directory, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(handle, "w", encoding="utf-8") as stream:
            stream.write(text)
        os.replace(temp_name, path)
    except BaseException:
        if os.path.exists(temp_name):
            os.unlink(temp_name)
        raise


def save_model(model: ProtoAlgorithm, path: Union[str, Path]) -> None:
    """Serialize ``model`` to ``path`` atomically."""
    write_text_atomic(path, serialize_model(model))
    logger.info("wrote model %s to %s", model.name or "<unnamed>", path)
