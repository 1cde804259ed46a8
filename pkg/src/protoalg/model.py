"""
Static objects of a concurrent proto-algorithm.

This module houses alphabets, component graphs, interpretations, whole
proto-algorithms and their states, together with the validators that turn
raw (parsed or programmatically built) structures into validated, immutable
model objects. Every validator collects all violated conditions before
raising ``ModelValidationError``.
"""

import enum
import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import (
    Any,
    Dict,
    FrozenSet,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Set,
    Tuple,
    Union,
)

import networkx as nx

from .errors import Issue, ModelValidationError

logger = logging.getLogger(__name__)

INI = "ini"
FIN = "fin"
RESERVED_SYMBOLS = (INI, FIN)
BOT_TOKEN = "_bot"


class Bottom(enum.Enum):
    """The dummy value marking an undefined slot of a state or table row."""

    BOT = BOT_TOKEN

    def __repr__(self) -> str:
        return "BOT"

    def __str__(self) -> str:
        return BOT_TOKEN


BOT = Bottom.BOT

Value = Union[int, str]
MaybeValue = Union[int, str, Bottom]
VertexId = str
MaybeVertex = Union[str, Bottom]


def value_key(value: Any) -> Tuple[int, int, str]:
    """Total order over BOT, integers and strings (in that order)."""
    if value is BOT:
        return (0, 0, "")
    if isinstance(value, int):
        return (1, value, "")
    return (2, 0, str(value))


def format_value(value: Any) -> str:
    """Token text of a value, BOT spelled ``_bot``."""
    return BOT_TOKEN if value is BOT else str(value)


def is_value(value: Any) -> bool:
    """Whether ``value`` may appear in a declared domain."""
    if isinstance(value, bool):
        return False
    if isinstance(value, int):
        return True
    return isinstance(value, str) and value != "" and value != BOT_TOKEN


class SymbolKind(enum.Enum):
    """The four disjoint symbol classes of an alphabet."""

    PROCESSING = "processing"
    SETTING = "setting"
    GETTING = "getting"
    PREDICATE = "predicate"


class BottomPolicy(enum.Enum):
    """How step rules treat BOT operands."""

    STRICT = "strict"
    LIFTED = "lifted"


class ValidationLevel(enum.Enum):
    """Whether minimality and the setting/getting laws are errors or warnings."""

    STRICT = "strict"
    LENIENT = "lenient"


class StateKind(enum.Enum):
    INITIAL = "initial"
    FINAL = "final"
    INTERNAL = "internal"


# Raw structures, as produced by the document parser or built in code.


@dataclass
class RawAlphabet:
    """Four symbol groups as declared, before any check."""

    processing: List[str]
    setting: List[str] = field(default_factory=list)
    getting: List[str] = field(default_factory=list)
    predicate: List[str] = field(default_factory=list)
    position: Optional[str] = None


@dataclass
class RawVertex:
    id: str
    label: str
    position: Optional[str] = None


@dataclass
class RawEdge:
    source: str
    target: str
    label: Any = None
    position: Optional[str] = None


@dataclass
class RawComponentGraph:
    """A component graph as declared."""

    vertices: List[RawVertex]
    edges: List[RawEdge]
    root: str
    main: Optional[bool] = None
    nondeterministic: bool = False
    name: Optional[str] = None
    position: Optional[str] = None


@dataclass
class RawInterpretation:
    """
    Domains and tables as declared.

    Unary tables map an argument to a result; binary tables are two-level
    mappings keyed first by the private argument, then by the shared one.
    """

    main_domain: List[Any]
    input_domain: List[Any]
    output_domain: List[Any]
    tables: Dict[str, Dict[Any, Any]]
    bottom_policy: BottomPolicy = BottomPolicy.LIFTED
    position: Optional[str] = None


@dataclass
class RawModel:
    """Everything a document declares."""

    alphabet: RawAlphabet
    components: List[RawComponentGraph]
    interpretation: RawInterpretation
    name: Optional[str] = None
    provenance: Optional[Dict[str, Any]] = None


# Validated objects.


@dataclass(frozen=True)
class SymbolName:
    name: str
    kind: SymbolKind


@dataclass(frozen=True)
class Alphabet:
    """A validated alphabet (F, F_s, F_g, P)."""

    processing: FrozenSet[str]
    setting: FrozenSet[str] = frozenset()
    getting: FrozenSet[str] = frozenset()
    predicate: FrozenSet[str] = frozenset()

    @property
    def f_hat(self) -> FrozenSet[str]:
        """Processing symbols without fin."""
        return self.processing - {FIN}

    @property
    def f_tilde(self) -> FrozenSet[str]:
        """Processing symbols without ini and fin."""
        return self.processing - {INI, FIN}

    @property
    def is_classical(self) -> bool:
        return not self.setting and not self.getting

    @property
    def all_symbols(self) -> FrozenSet[str]:
        return self.processing | self.setting | self.getting | self.predicate

    def kind_of(self, name: str) -> Optional[SymbolKind]:
        """Return the class of ``name``, or None when it is not a symbol."""
        if name in self.processing:
            return SymbolKind.PROCESSING
        if name in self.setting:
            return SymbolKind.SETTING
        if name in self.getting:
            return SymbolKind.GETTING
        if name in self.predicate:
            return SymbolKind.PREDICATE
        return None

    def symbols(self) -> List[SymbolName]:
        """All symbols, grouped by class and sorted by name."""
        groups = (
            (SymbolKind.PROCESSING, self.processing),
            (SymbolKind.SETTING, self.setting),
            (SymbolKind.GETTING, self.getting),
            (SymbolKind.PREDICATE, self.predicate),
        )
        return [SymbolName(n, kind) for kind, names in groups for n in sorted(names)]


@dataclass(frozen=True)
class ComponentGraph:
    """A validated component graph; vertices and edges keep declared order."""

    vertices: Tuple[VertexId, ...]
    edges: Tuple[Tuple[VertexId, VertexId, Optional[int]], ...]
    labels: Mapping[VertexId, str]
    root: VertexId
    nondet_allowed: bool = False
    name: Optional[str] = None

    @cached_property
    def out_edges(self) -> Dict[VertexId, Tuple[Tuple[VertexId, Optional[int]], ...]]:
        """Outgoing edges per vertex, ordered by target id."""
        out: Dict[VertexId, List[Tuple[VertexId, Optional[int]]]] = {
            v: [] for v in self.vertices
        }
        for source, target, label in self.edges:
            out[source].append((target, label))
        return {v: tuple(sorted(targets)) for v, targets in out.items()}

    @cached_property
    def in_degrees(self) -> Dict[VertexId, int]:
        degrees = {v: 0 for v in self.vertices}
        for _, target, _ in self.edges:
            degrees[target] += 1
        return degrees

    def label(self, vertex: VertexId) -> str:
        return self.labels[vertex]

    def outdegree(self, vertex: VertexId) -> int:
        return len(self.out_edges[vertex])

    def indegree(self, vertex: VertexId) -> int:
        return self.in_degrees[vertex]

    @property
    def is_main(self) -> bool:
        return self.labels[self.root] == INI

    def is_deterministic(self, alphabet: Alphabet) -> bool:
        """Whether every function vertex has exactly one successor."""
        for v in self.vertices:
            label = self.labels[v]
            if label == FIN or alphabet.kind_of(label) is SymbolKind.PREDICATE:
                continue
            if self.outdegree(v) != 1:
                return False
        return True

    def to_networkx(self) -> nx.DiGraph:
        """The graph with ``label`` node attributes and ``label`` edge attributes."""
        graph = nx.DiGraph()
        for v in self.vertices:
            graph.add_node(v, label=self.labels[v])
        for source, target, label in self.edges:
            graph.add_edge(source, target, label=label)
        return graph


@dataclass(frozen=True)
class Interpretation:
    """
    A validated interpretation over finite domains.

    ``tables`` maps every symbol to a dictionary; unary tables are keyed by a
    single value and binary tables by a ``(private, shared)`` pair. Under the
    lifted bottom policy the tables also carry BOT rows.
    """

    main_domain: Tuple[Value, ...]
    input_domain: Tuple[Value, ...]
    output_domain: Tuple[Value, ...]
    tables: Mapping[str, Mapping[Any, MaybeValue]]
    bottom_policy: BottomPolicy
    closure: FrozenSet[Value] = frozenset()

    def apply(self, symbol: str, *args: MaybeValue) -> MaybeValue:
        """Look up ``symbol`` applied to one or two arguments."""
        key = args[0] if len(args) == 1 else tuple(args)
        return self.tables[symbol][key]

    @property
    def lifted(self) -> bool:
        return self.bottom_policy is BottomPolicy.LIFTED


@dataclass(frozen=True)
class ProtoAlgorithm:
    """A validated concurrent proto-algorithm (alphabet, components, interpretation)."""

    alphabet: Alphabet
    components: Tuple[ComponentGraph, ...]
    interpretation: Interpretation
    level: ValidationLevel = ValidationLevel.STRICT
    warnings: Tuple[Issue, ...] = ()
    name: Optional[str] = None
    provenance: Optional[Mapping[str, Any]] = None

    @property
    def n(self) -> int:
        return len(self.components)

    @cached_property
    def main_index(self) -> int:
        """1-based index of the main component."""
        for index, component in enumerate(self.components, start=1):
            if component.is_main:
                return index
        raise ValueError("model has no main component")

    @property
    def main_component(self) -> ComponentGraph:
        return self.components[self.main_index - 1]

    @property
    def is_sequential(self) -> bool:
        return self.n == 1

    @cached_property
    def has_nondeterministic_components(self) -> bool:
        return any(not g.is_deterministic(self.alphabet) for g in self.components)

    @property
    def is_classical(self) -> bool:
        return (
            self.alphabet.is_classical
            and self.is_sequential
            and not self.has_nondeterministic_components
        )

    @cached_property
    def roots(self) -> Tuple[VertexId, ...]:
        return tuple(g.root for g in self.components)

    def classifiers(self) -> Dict[str, Any]:
        """The derived classification flags, for reports."""
        return {
            "classical": self.is_classical,
            "sequential": self.is_sequential,
            "nondeterministic_components": self.has_nondeterministic_components,
            "components": self.n,
            "main_index": self.main_index,
        }


@dataclass(frozen=True)
class Control:
    """Control part of an internal state: vertices, private data, shared datum, scheduled index."""

    vertices: Tuple[MaybeVertex, ...]
    privates: Tuple[MaybeValue, ...]
    shared: MaybeValue
    scheduled: Union[int, Bottom]


@dataclass(frozen=True)
class State:
    """
    A state (d_i, c, d_o).

    ``control`` is None for the all-BOT control tuple.
    """

    d_i: MaybeValue
    control: Optional[Control]
    d_o: MaybeValue

    @classmethod
    def initial(cls, d_i: Value) -> "State":
        return cls(d_i, None, BOT)

    @classmethod
    def final(cls, d_o: Value) -> "State":
        return cls(BOT, None, d_o)

    @property
    def kind(self) -> StateKind:
        if self.d_i is not BOT:
            return StateKind.INITIAL
        if self.d_o is not BOT:
            return StateKind.FINAL
        return StateKind.INTERNAL

    def sort_key(self) -> Tuple[Any, ...]:
        if self.control is None:
            control_key: Tuple[Any, ...] = ()
        else:
            c = self.control
            control_key = (
                tuple(value_key(v) for v in c.vertices),
                tuple(value_key(d) for d in c.privates),
                value_key(c.shared),
                value_key(c.scheduled),
            )
        return (value_key(self.d_i), control_key, value_key(self.d_o))

    def render(self) -> str:
        """Canonical text of the state."""
        if self.control is None:
            control = "_bot_c"
        else:
            c = self.control
            vertices = ",".join(format_value(v) for v in c.vertices)
            privates = ",".join(format_value(d) for d in c.privates)
            control = (
                f"(({vertices}),({privates}),{format_value(c.shared)},"
                f"{format_value(c.scheduled)})"
            )
        return f"({format_value(self.d_i)}, {control}, {format_value(self.d_o)})"

    def __str__(self) -> str:
        return self.render()


def sort_states(states: Iterable[State]) -> List[State]:
    """Canonically ordered, duplicate-free list of states."""
    return sorted(set(states), key=State.sort_key)


# Validators.


def _at(position: Optional[str], suffix: str = "") -> Optional[str]:
    if position is None:
        return suffix or None
    return f"{position}{suffix}"


def validate_alphabet(raw: RawAlphabet) -> Alphabet:
    """
    Validate four declared symbol groups.

    Args:
        raw: The declared symbol groups

    Returns:
        The validated alphabet

    Raises:
        ModelValidationError: With one issue per violated clause
    """
    issues = _alphabet_issues(raw)
    if issues:
        raise ModelValidationError(issues)
    return Alphabet(
        processing=frozenset(raw.processing),
        setting=frozenset(raw.setting),
        getting=frozenset(raw.getting),
        predicate=frozenset(raw.predicate),
    )


def _alphabet_issues(raw: RawAlphabet) -> List[Issue]:
    issues: List[Issue] = []
    groups = {
        SymbolKind.PROCESSING: raw.processing,
        SymbolKind.SETTING: raw.setting,
        SymbolKind.GETTING: raw.getting,
        SymbolKind.PREDICATE: raw.predicate,
    }
    for kind, names in groups.items():
        seen: Set[str] = set()
        for name in names:
            if not isinstance(name, str) or not name:
                issues.append(
                    Issue(
                        "InvalidSymbolName",
                        f"{kind.value} symbol {name!r} must be a non-empty string",
                        _at(raw.position, f".{kind.value}"),
                        name,
                    )
                )
            elif name in seen:
                issues.append(
                    Issue(
                        "DuplicateSymbol",
                        f"{kind.value} symbol {name!r} declared twice",
                        _at(raw.position, f".{kind.value}"),
                        name,
                    )
                )
            seen.add(name)

    for (kind_a, names_a), (kind_b, names_b) in itertools.combinations(
        groups.items(), 2
    ):
        shared = sorted(set(names_a) & set(names_b), key=str)
        if shared:
            issues.append(
                Issue(
                    "OverlappingSymbolClasses",
                    f"{kind_a.value} and {kind_b.value} symbols overlap: "
                    f"{', '.join(map(str, shared))}",
                    raw.position,
                    shared,
                )
            )

    for reserved in RESERVED_SYMBOLS:
        if reserved not in raw.processing:
            issues.append(
                Issue(
                    "MissingReservedSymbol",
                    f"{reserved} must be a processing symbol",
                    _at(raw.position, ".processing"),
                    reserved,
                )
            )
        for kind in (SymbolKind.SETTING, SymbolKind.GETTING, SymbolKind.PREDICATE):
            if reserved in groups[kind]:
                issues.append(
                    Issue(
                        "ReservedSymbolMisplaced",
                        f"{reserved} may only be a processing symbol, "
                        f"found among {kind.value} symbols",
                        _at(raw.position, f".{kind.value}"),
                        reserved,
                    )
                )
    return issues


def validate_component_graph(
    raw: RawComponentGraph,
    alphabet: Alphabet,
    nondet_allowed: Optional[bool] = None,
) -> ComponentGraph:
    """
    Validate a declared component graph against an alphabet.

    Args:
        raw: The declared graph
        alphabet: A validated alphabet
        nondet_allowed: Outdegree rule to apply; defaults to the graph's own flag

    Returns:
        The validated graph; ``is_main`` tells main from non-main graphs

    Raises:
        ModelValidationError: With one issue per violated clause, each
            carrying the witnessing vertex, edge or cycle
    """
    if nondet_allowed is None:
        nondet_allowed = raw.nondeterministic
    issues = _graph_issues(raw, alphabet, nondet_allowed)
    if issues:
        raise ModelValidationError(issues)
    return ComponentGraph(
        vertices=tuple(v.id for v in raw.vertices),
        edges=tuple((e.source, e.target, e.label) for e in raw.edges),
        labels={v.id: v.label for v in raw.vertices},
        root=raw.root,
        nondet_allowed=nondet_allowed,
        name=raw.name,
    )


def _graph_issues(
    raw: RawComponentGraph, alphabet: Alphabet, nondet_allowed: bool
) -> List[Issue]:
    issues: List[Issue] = []
    labels: Dict[str, str] = {}
    positions: Dict[str, Optional[str]] = {}
    for vertex in raw.vertices:
        if vertex.id in labels:
            issues.append(
                Issue(
                    "DuplicateId",
                    f"vertex {vertex.id!r} declared twice",
                    vertex.position,
                    vertex.id,
                )
            )
            continue
        labels[vertex.id] = vertex.label
        positions[vertex.id] = vertex.position
        if alphabet.kind_of(vertex.label) is None:
            issues.append(
                Issue(
                    "UnknownSymbol",
                    f"vertex {vertex.id!r} is labeled {vertex.label!r}, "
                    "which is not a symbol of the alphabet",
                    vertex.position,
                    vertex.id,
                )
            )

    if raw.root not in labels:
        issues.append(
            Issue(
                "UnknownRoot",
                f"root {raw.root!r} is not a vertex",
                _at(raw.position, ".root"),
                raw.root,
            )
        )

    out: Dict[str, List[RawEdge]] = {v: [] for v in labels}
    indegree: Dict[str, int] = {v: 0 for v in labels}
    seen_edges: Set[Tuple[str, str]] = set()
    for edge in raw.edges:
        if edge.source not in labels or edge.target not in labels:
            missing = edge.source if edge.source not in labels else edge.target
            issues.append(
                Issue(
                    "UnknownVertex",
                    f"edge {edge.source!r}->{edge.target!r} names unknown vertex "
                    f"{missing!r}",
                    edge.position,
                    (edge.source, edge.target),
                )
            )
            continue
        if (edge.source, edge.target) in seen_edges:
            issues.append(
                Issue(
                    "DuplicateEdge",
                    f"edge {edge.source!r}->{edge.target!r} declared twice",
                    edge.position,
                    (edge.source, edge.target),
                )
            )
            continue
        seen_edges.add((edge.source, edge.target))
        if edge.label is not None and (
            isinstance(edge.label, bool) or edge.label not in (0, 1)
        ):
            issues.append(
                Issue(
                    "InvalidEdgeLabel",
                    f"edge {edge.source!r}->{edge.target!r} has label "
                    f"{edge.label!r}; edge labels are 0 and 1",
                    edge.position,
                    (edge.source, edge.target),
                )
            )
        out[edge.source].append(edge)
        indegree[edge.target] += 1

    for vertex_id, label in labels.items():
        where = positions[vertex_id]
        kind = alphabet.kind_of(label)
        edges = out[vertex_id]
        if vertex_id == raw.root and indegree[vertex_id] != 0:
            issues.append(
                Issue(
                    "RootHasIncomingEdge",
                    f"root {vertex_id!r} has indegree {indegree[vertex_id]}",
                    where,
                    vertex_id,
                )
            )
        if vertex_id != raw.root and indegree[vertex_id] == 0:
            issues.append(
                Issue(
                    "UnrootedVertex",
                    f"vertex {vertex_id!r} has indegree 0 but is not the root",
                    where,
                    vertex_id,
                )
            )
        if label == INI and vertex_id != raw.root:
            issues.append(
                Issue(
                    "IniNotAtRoot",
                    f"vertex {vertex_id!r} is labeled ini but is not the root",
                    where,
                    vertex_id,
                )
            )
        if label == FIN:
            if edges:
                issues.append(
                    Issue(
                        "FinHasSuccessor",
                        f"fin vertex {vertex_id!r} has outdegree {len(edges)}",
                        where,
                        vertex_id,
                    )
                )
            continue
        if kind in (SymbolKind.PROCESSING, SymbolKind.SETTING, SymbolKind.GETTING):
            if nondet_allowed and not edges:
                issues.append(
                    Issue(
                        "FunctionOutdegree",
                        f"function vertex {vertex_id!r} needs at least one successor",
                        where,
                        vertex_id,
                    )
                )
            elif not nondet_allowed and len(edges) != 1:
                issues.append(
                    Issue(
                        "FunctionOutdegree",
                        f"function vertex {vertex_id!r} has outdegree {len(edges)}, "
                        "expected exactly 1",
                        where,
                        vertex_id,
                    )
                )
            for edge in edges:
                if edge.label is not None:
                    issues.append(
                        Issue(
                            "FunctionEdgeLabeled",
                            f"edge {edge.source!r}->{edge.target!r} leaves a "
                            "function vertex and must be unlabeled",
                            edge.position,
                            (edge.source, edge.target),
                        )
                    )
        elif kind is SymbolKind.PREDICATE:
            if len(edges) != 2:
                issues.append(
                    Issue(
                        "PredicateOutdegree",
                        f"predicate vertex {vertex_id!r} has outdegree {len(edges)}, "
                        "expected exactly 2",
                        where,
                        vertex_id,
                    )
                )
                continue
            if any(edge.label is None for edge in edges):
                issues.append(
                    Issue(
                        "PredicateEdgeUnlabeled",
                        f"predicate vertex {vertex_id!r} has an unlabeled out-edge",
                        where,
                        vertex_id,
                    )
                )
            elif edges[0].label == edges[1].label:
                issues.append(
                    Issue(
                        "PredicateEdgeLabelsNotDistinct",
                        f"predicate vertex {vertex_id!r}: predicate out-edges must "
                        "carry distinct labels",
                        where,
                        vertex_id,
                    )
                )

    has_fin = any(label == FIN for label in labels.values())
    root_is_ini = labels.get(raw.root) == INI
    if root_is_ini and not has_fin:
        issues.append(
            Issue(
                "MainWithoutFin",
                "root is labeled ini but no vertex is labeled fin",
                raw.position,
                raw.root,
            )
        )
    elif has_fin and raw.root in labels and not root_is_ini:
        issues.append(
            Issue(
                "FinWithoutIniRoot",
                "a vertex is labeled fin but the root is not labeled ini",
                raw.position,
                raw.root,
            )
        )

    cycle = _predicate_cycle(labels, out, alphabet)
    if cycle is not None:
        issues.append(
            Issue(
                "CycleWithoutFunctionVertex",
                "cycle through predicate vertices only: " + " -> ".join(cycle),
                raw.position,
                cycle,
            )
        )
    return issues


def _predicate_cycle(
    labels: Mapping[str, str], out: Mapping[str, List[RawEdge]], alphabet: Alphabet
) -> Optional[List[str]]:
    """Find a cycle whose vertices are all predicate-labeled, if any."""
    predicates = [v for v, label in labels.items() if label in alphabet.predicate]
    graph = nx.DiGraph()
    graph.add_nodes_from(predicates)
    for source in predicates:
        for edge in out[source]:
            if edge.target in graph:
                graph.add_edge(source, edge.target)
    try:
        edges = nx.find_cycle(graph)
    except nx.NetworkXNoCycle:
        return None
    cycle = [source for source, _ in edges]
    return cycle + [cycle[0]]


def _signature(
    symbol: str, alphabet: Alphabet
) -> Tuple[str, str, str]:
    """(arity, argument domain, result domain) of a symbol's table."""
    if symbol == INI:
        return ("unary", "input", "main")
    if symbol == FIN:
        return ("unary", "main", "output")
    kind = alphabet.kind_of(symbol)
    if kind is SymbolKind.PREDICATE:
        return ("unary", "main", "bit")
    if kind in (SymbolKind.SETTING, SymbolKind.GETTING):
        return ("binary", "main", "main")
    return ("unary", "main", "main")


def validate_interpretation(
    raw: RawInterpretation,
    alphabet: Alphabet,
    level: ValidationLevel = ValidationLevel.STRICT,
) -> Tuple[Interpretation, List[Issue]]:
    """
    Validate domains and tables against an alphabet.

    Signature totality is always an error. Minimality and the
    setting/getting laws are errors at the strict level and warnings at the
    lenient level.

    Args:
        raw: The declared domains and tables
        alphabet: A validated alphabet
        level: Validation level

    Returns:
        The interpretation (with the computed closure) and the warning list

    Raises:
        ModelValidationError: When any error-level condition is violated
    """
    issues: List[Issue] = []
    domains: Dict[str, Tuple[Any, ...]] = {}
    for name, values in (
        ("main", raw.main_domain),
        ("input", raw.input_domain),
        ("output", raw.output_domain),
    ):
        where = _at(raw.position, f".domains.{name}")
        seen: List[Any] = []
        for value in values:
            if value is BOT or value == BOT_TOKEN:
                issues.append(
                    Issue("BotInDomain", f"BOT may not be declared in the {name} domain", where)
                )
            elif not is_value(value):
                issues.append(
                    Issue(
                        "InvalidValue",
                        f"{value!r} in the {name} domain is not an integer or token",
                        where,
                        value,
                    )
                )
            elif format_value(value) in {format_value(v) for v in seen}:
                issues.append(
                    Issue(
                        "DuplicateValue",
                        f"{value!r} declared twice in the {name} domain",
                        where,
                        value,
                    )
                )
            else:
                seen.append(value)
        domains[name] = tuple(seen)

    lifted = raw.bottom_policy is BottomPolicy.LIFTED
    tables: Dict[str, Dict[Any, MaybeValue]] = {}
    for symbol in sorted(alphabet.all_symbols):
        where = _at(raw.position, f".interpretation.tables.{symbol}")
        if symbol not in raw.tables:
            issues.append(
                Issue("MissingTable", f"no table for symbol {symbol!r}", where, symbol)
            )
            continue
        table, table_issues = _check_table(
            symbol, raw.tables[symbol], alphabet, domains, lifted, where
        )
        issues.extend(table_issues)
        tables[symbol] = table
    for symbol in sorted(set(raw.tables) - alphabet.all_symbols, key=str):
        issues.append(
            Issue(
                "UnknownTable",
                f"table for {symbol!r}, which is not a symbol of the alphabet",
                _at(raw.position, f".interpretation.tables.{symbol}"),
                symbol,
            )
        )
    if issues:
        raise ModelValidationError(issues)

    interpretation = Interpretation(
        main_domain=domains["main"],
        input_domain=domains["input"],
        output_domain=domains["output"],
        tables=tables,
        bottom_policy=raw.bottom_policy,
    )
    closure = compute_closure(interpretation, alphabet)
    interpretation = Interpretation(
        main_domain=interpretation.main_domain,
        input_domain=interpretation.input_domain,
        output_domain=interpretation.output_domain,
        tables=tables,
        bottom_policy=raw.bottom_policy,
        closure=closure,
    )

    soft: List[Issue] = []
    if closure != frozenset(domains["main"]):
        witness = [v for v in domains["main"] if v in closure]
        soft.append(
            Issue(
                "NonMinimalDomain",
                "the main domain has a proper subset closed under ini and all "
                f"function tables: {{{', '.join(map(str, witness))}}}",
                _at(raw.position, ".domains.main"),
                witness,
            )
        )
    soft.extend(law_violations(interpretation, alphabet, raw.position))

    if level is ValidationLevel.STRICT and soft:
        raise ModelValidationError(soft)
    for warning in soft:
        logger.warning(warning.render())
    return interpretation, soft


def _check_table(
    symbol: str,
    rows: Any,
    alphabet: Alphabet,
    domains: Mapping[str, Tuple[Any, ...]],
    lifted: bool,
    where: Optional[str],
) -> Tuple[Dict[Any, MaybeValue], List[Issue]]:
    issues: List[Issue] = []
    arity, argument, result = _signature(symbol, alphabet)
    arguments: List[Any] = list(domains[argument])
    if lifted and argument == "main":
        arguments.append(BOT)
    if result == "bit":
        results: List[Any] = [0, 1]
    else:
        results = list(domains[result])
        if lifted and result == "main" and symbol != INI:
            results.append(BOT)

    table: Dict[Any, MaybeValue] = {}
    if not isinstance(rows, Mapping):
        issues.append(
            Issue("SignatureMismatch", f"table of {symbol!r} must be a mapping", where, symbol)
        )
        return table, issues

    def check_result(key: Any, value: Any) -> None:
        if result == "bit" and value is BOT:
            issues.append(
                Issue(
                    "PredicateReturnsBot",
                    f"predicate {symbol!r} returns BOT on {format_value(key)}",
                    where,
                    key,
                )
            )
        elif value not in results or isinstance(value, bool):
            issues.append(
                Issue(
                    "SignatureMismatch",
                    f"{symbol!r} maps {key!r} to {value!r}, outside its result domain",
                    where,
                    (key, value),
                )
            )
        table[key] = value

    allowed = set(arguments) | ({BOT} if argument == "main" else set())
    if arity == "unary":
        for key, value in rows.items():
            if key not in allowed or isinstance(key, bool):
                issues.append(
                    Issue(
                        "SignatureMismatch",
                        f"{symbol!r} has a row for {key!r}, outside its argument domain",
                        where,
                        key,
                    )
                )
                continue
            if key is BOT and not lifted:
                continue
            check_result(key, value)
        missing = [a for a in arguments if a not in rows]
    else:
        for first, inner in rows.items():
            if first not in allowed or not isinstance(inner, Mapping):
                issues.append(
                    Issue(
                        "SignatureMismatch",
                        f"{symbol!r} has a malformed row for {first!r}",
                        where,
                        first,
                    )
                )
                continue
            for second, value in inner.items():
                if second not in allowed:
                    issues.append(
                        Issue(
                            "SignatureMismatch",
                            f"{symbol!r} has a row for {(first, second)!r}, outside "
                            "its argument domain",
                            where,
                            (first, second),
                        )
                    )
                    continue
                if (first is BOT or second is BOT) and not lifted:
                    continue
                check_result((first, second), value)
        missing = [
            (a, b)
            for a in arguments
            for b in arguments
            if not isinstance(rows.get(a), Mapping) or b not in rows[a]
        ]
    if missing:
        issues.append(
            Issue(
                "IncompleteTable",
                f"{symbol!r} lacks {len(missing)} row(s), first "
                f"{_render_key(missing[0])}",
                where,
                missing,
            )
        )
    return table, issues


def _render_key(key: Any) -> str:
    if isinstance(key, tuple):
        return "(" + ", ".join(format_value(k) for k in key) + ")"
    return format_value(key)


def compute_closure(interpretation: Interpretation, alphabet: Alphabet) -> FrozenSet[Value]:
    """
    Smallest subset of the main domain holding every ini image and closed
    under all processing, setting and getting tables.
    """
    closure: Set[Value] = set()
    frontier: List[Value] = []

    def add(value: MaybeValue) -> None:
        if value is not BOT and value not in closure:
            closure.add(value)  # type: ignore[arg-type]
            frontier.append(value)  # type: ignore[arg-type]

    for d_i in interpretation.input_domain:
        add(interpretation.apply(INI, d_i))
    unary = sorted(alphabet.f_tilde)
    binary = sorted(alphabet.setting | alphabet.getting)
    while frontier:
        value = frontier.pop()
        for f in unary:
            add(interpretation.apply(f, value))
        for f in binary:
            for other in list(closure):
                add(interpretation.apply(f, value, other))
                add(interpretation.apply(f, other, value))
    return frozenset(closure)


def law_violations(
    interpretation: Interpretation, alphabet: Alphabet, position: Optional[str] = None
) -> List[Issue]:
    """
    Check the setting/getting laws over the main domain.

    For each setter f and pair (d, d'): f(d, f(d, d')) = f(d, d') and some
    getter g has g(d, f(d, d')) = d. Symmetrically for getters. The partner
    symbol may differ per pair.
    """
    issues: List[Issue] = []
    domain = interpretation.main_domain
    apply = interpretation.apply
    where = _at(position, ".interpretation.tables")

    def violated(f: str, d: Any, d2: Any, message: str) -> None:
        issues.append(
            Issue(
                "SettingGettingLawViolated",
                f"{f}({format_value(d)}, {format_value(d2)}): {message}",
                where,
                (f, d, d2),
            )
        )

    for f in sorted(alphabet.setting):
        for d in domain:
            for d2 in domain:
                e = apply(f, d, d2)
                if e is BOT:
                    violated(f, d, d2, "result is BOT")
                    continue
                if apply(f, d, e) != e:
                    violated(f, d, d2, "setting twice differs from setting once")
                if not any(apply(g, d, e) == d for g in alphabet.getting):
                    violated(f, d, d2, "no getting symbol recovers the private datum")
    for f in sorted(alphabet.getting):
        for d in domain:
            for d2 in domain:
                e = apply(f, d, d2)
                if e is BOT:
                    violated(f, d, d2, "result is BOT")
                    continue
                if apply(f, e, d2) != e:
                    violated(f, d, d2, "getting twice differs from getting once")
                if not any(apply(g, e, d2) == d2 for g in alphabet.setting):
                    violated(f, d, d2, "no setting symbol recovers the shared datum")
    return issues


def validate_proto_algorithm(
    alphabet: Union[RawAlphabet, Alphabet],
    components: Sequence[Union[RawComponentGraph, ComponentGraph]],
    interpretation: Union[RawInterpretation, Interpretation],
    level: ValidationLevel = ValidationLevel.STRICT,
    name: Optional[str] = None,
    provenance: Optional[Mapping[str, Any]] = None,
) -> ProtoAlgorithm:
    """
    Compose the part validators and enforce the exactly-one-main rule.

    Args:
        alphabet: Raw or validated alphabet
        components: Raw or validated component graphs, in order
        interpretation: Raw or validated interpretation
        level: Validation level for the interpretation conditions
        name: Model name carried into reports
        provenance: Optional provenance block

    Returns:
        The validated proto-algorithm with its warnings attached

    Raises:
        ModelValidationError: With every violated condition of every part
    """
    if isinstance(alphabet, RawAlphabet):
        sigma = validate_alphabet(alphabet)
    else:
        sigma = alphabet

    issues: List[Issue] = []
    graphs: List[ComponentGraph] = []
    for index, component in enumerate(components, start=1):
        if isinstance(component, ComponentGraph):
            graphs.append(component)
            continue
        try:
            graph = validate_component_graph(component, sigma)
        except ModelValidationError as exc:
            issues.extend(exc.issues)
            continue
        if component.main is not None and component.main != graph.is_main:
            issues.append(
                Issue(
                    "MainFlagMismatch",
                    f"component {index} is declared main={component.main} but its "
                    f"root is {'' if graph.is_main else 'not '}labeled ini",
                    component.position,
                    index,
                )
            )
        graphs.append(graph)

    warnings: List[Issue] = []
    interp: Optional[Interpretation] = None
    if isinstance(interpretation, Interpretation):
        interp = interpretation
        if set(interp.tables) != set(sigma.all_symbols):
            issues.append(
                Issue(
                    "SymbolTableMismatch",
                    "the interpretation's tables do not match the alphabet",
                    None,
                    sorted(set(interp.tables) ^ set(sigma.all_symbols)),
                )
            )
    else:
        try:
            interp, warnings = validate_interpretation(interpretation, sigma, level)
        except ModelValidationError as exc:
            issues.extend(exc.issues)

    if not issues:
        mains = [i for i, g in enumerate(graphs, start=1) if g.is_main]
        if not mains:
            issues.append(Issue("NoMainComponent", "no component is a main component graph"))
        elif len(mains) > 1:
            issues.append(
                Issue(
                    "MultipleMainComponents",
                    f"components {', '.join(map(str, mains))} are all main component graphs",
                    None,
                    mains,
                )
            )
    if issues:
        raise ModelValidationError(issues)

    assert interp is not None
    model = ProtoAlgorithm(
        alphabet=sigma,
        components=tuple(graphs),
        interpretation=interp,
        level=level,
        warnings=tuple(warnings),
        name=name,
        provenance=provenance,
    )
    logger.debug(
        "validated model %s: %d component(s), |D|=%d, classifiers=%s",
        name or "<unnamed>",
        model.n,
        len(interp.main_domain),
        model.classifiers(),
    )
    return model


def validate_model(
    raw: RawModel,
    level: ValidationLevel = ValidationLevel.STRICT,
    bottom_policy: Optional[BottomPolicy] = None,
) -> ProtoAlgorithm:
    """Validate a whole raw model, optionally overriding its bottom policy."""
    interpretation = raw.interpretation
    if bottom_policy is not None and bottom_policy is not interpretation.bottom_policy:
        interpretation = RawInterpretation(
            main_domain=interpretation.main_domain,
            input_domain=interpretation.input_domain,
            output_domain=interpretation.output_domain,
            tables=interpretation.tables,
            bottom_policy=bottom_policy,
            position=interpretation.position,
        )
    return validate_proto_algorithm(
        raw.alphabet,
        raw.components,
        interpretation,
        level,
        name=raw.name,
        provenance=raw.provenance,
    )


def classify_state(model: ProtoAlgorithm, raw: Any) -> State:
    """
    Check a raw (d_i, control, d_o) triple and return it as a State.

    ``control`` may be None, a ``Control``, or a 4-tuple
    (vertices, privates, shared, scheduled); an all-BOT control is
    normalized to None.

    Raises:
        ModelValidationError: With an ``IllFormedState`` issue per violated clause
    """
    if isinstance(raw, State):
        d_i, control, d_o = raw.d_i, raw.control, raw.d_o
    elif not isinstance(raw, (tuple, list)) or len(raw) != 3:
        raise ModelValidationError(
            [Issue("IllFormedState", "a state is a (d_i, control, d_o) triple", None, raw)]
        )
    else:
        d_i, control, d_o = raw
    interp = model.interpretation
    problems: List[str] = []

    if d_i is not BOT and d_i not in interp.input_domain:
        problems.append(f"input {d_i!r} is not in the input domain")
    if d_o is not BOT and d_o not in interp.output_domain:
        problems.append(f"output {d_o!r} is not in the output domain")

    if control is not None and not isinstance(control, Control):
        if not isinstance(control, (tuple, list)) or len(control) != 4:
            raise ModelValidationError(
                [
                    Issue(
                        "IllFormedState",
                        "a control is a (vertices, privates, shared, scheduled) tuple",
                        None,
                        raw,
                    )
                ]
            )
        vertices, privates, shared, scheduled = control
        control = Control(tuple(vertices), tuple(privates), shared, scheduled)
    if control is not None:
        all_bot = (
            all(v is BOT for v in control.vertices)
            and all(d is BOT for d in control.privates)
            and control.shared is BOT
            and control.scheduled is BOT
        )
        if all_bot:
            control = None
    if control is not None:
        if len(control.vertices) != model.n or len(control.privates) != model.n:
            problems.append(f"control tuples must have length {model.n}")
        else:
            for index, (vertex, graph) in enumerate(
                zip(control.vertices, model.components), start=1
            ):
                if vertex is not BOT and vertex not in graph.labels:
                    problems.append(f"{vertex!r} is not a vertex of component {index}")
        domain = set(interp.main_domain) | {BOT}
        for datum in (*control.privates, control.shared):
            if datum not in domain:
                problems.append(f"{datum!r} is not in the main domain")
        if control.scheduled is not BOT and control.scheduled not in range(1, model.n + 1):
            problems.append(f"scheduled index {control.scheduled!r} is out of range")

    if control is None:
        if (d_i is BOT) == (d_o is BOT):
            problems.append(
                "with the all-BOT control exactly one of input and output must be set"
            )
    elif d_i is not BOT or d_o is not BOT:
        problems.append("an internal control requires BOT input and output")

    if problems:
        raise ModelValidationError(
            [Issue("IllFormedState", p, None, (d_i, control, d_o)) for p in problems]
        )
    return State(d_i, control, d_o)
