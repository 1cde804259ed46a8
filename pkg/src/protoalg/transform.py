"""
Sequentialization of concurrent proto-algorithms.

The product construction compiles an n-component model into a single
nondeterministic component. A product vertex pairs a vertex tuple with the
index of the component about to act; data become (n+1)-tuples of private
slots followed by the shared slot, encoded as string tokens such as
``(0,_bot,_bot)``.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

from .config import get_state_cap
from .equivalence import (
    EquivalenceReport,
    SimulationRelation,
    check_equivalence,
    verify_simulation,
)
from .errors import (
    CertificationFailed,
    Issue,
    ModelValidationError,
    ResourceBoundExceeded,
    SequentializationError,
)
from .model import (
    BOT,
    FIN,
    INI,
    BottomPolicy,
    Control,
    MaybeValue,
    ProtoAlgorithm,
    RawAlphabet,
    RawComponentGraph,
    RawEdge,
    RawInterpretation,
    RawVertex,
    State,
    StateKind,
    SymbolKind,
    ValidationLevel,
    format_value,
    validate_proto_algorithm,
)
from .semantics import Variant, build_state_graph, computed_function

logger = logging.getLogger(__name__)

CONSTRUCTION = "product-sequentialization"
CONSTRUCTION_VERSION = "1"

ProductVertex = Tuple[Tuple[str, ...], int]
DataTuple = Tuple[MaybeValue, ...]


def tuple_token(values: DataTuple) -> str:
    """Token of a data tuple, e.g. ``(0,_bot,_bot)``."""
    return "(" + ",".join(format_value(v) for v in values) + ")"


def product_vertex_id(vertex: ProductVertex) -> str:
    vertices, index = vertex
    return f"({','.join(vertices)})@{index}"


@dataclass(frozen=True)
class SequentializationResult:
    """
    The sequentialized model and how it relates to its source.

    ``vertex_map`` sends product vertices ((v_1, ..., v_n), i) to output
    vertex ids, ``symbol_map`` sends (symbol, i) to the indexed symbol.
    """

    output: ProtoAlgorithm
    vertex_map: Mapping[ProductVertex, str]
    symbol_map: Mapping[Tuple[str, int], str]
    data_map: Mapping[DataTuple, str]
    certificate: Optional[EquivalenceReport] = None


def _indexed_symbols(model: ProtoAlgorithm) -> Dict[Tuple[str, int], str]:
    alphabet = model.alphabet
    names: Dict[Tuple[str, int], str] = {}
    renamed = alphabet.f_tilde | alphabet.setting | alphabet.getting | alphabet.predicate
    for symbol in sorted(renamed):
        for index in range(1, model.n + 1):
            names[(symbol, index)] = f"{symbol}_{index}"
    generated = list(names.values())
    clashes = sorted(
        {name for name in generated if generated.count(name) > 1 or name in (INI, FIN)}
    )
    if clashes:
        raise SequentializationError(
            "indexed symbol names collide: " + ", ".join(clashes)
        )
    return names


def _build_product(
    model: ProtoAlgorithm, limit: int
) -> Tuple[List[ProductVertex], List[Tuple[ProductVertex, ProductVertex, Optional[int]]]]:
    """Product vertices reachable from the root, in discovery order, and their edges."""
    main = model.main_index
    root: ProductVertex = (model.roots, main)
    order = [root]
    seen = {root}
    edges: List[Tuple[ProductVertex, ProductVertex, Optional[int]]] = []
    queue = deque([root])
    while queue:
        vertex = queue.popleft()
        vertices, index = vertex
        graph = model.components[index - 1]
        current = vertices[index - 1]
        label = graph.label(current)
        if label == FIN:
            continue
        predicate = label in model.alphabet.predicate
        for target, edge_label in graph.out_edges[current]:
            moved = vertices[: index - 1] + (target,) + vertices[index:]
            next_indices = [index] if predicate else range(1, model.n + 1)
            for next_index in next_indices:
                successor: ProductVertex = (moved, next_index)
                edges.append((vertex, successor, edge_label if predicate else None))
                if successor not in seen:
                    seen.add(successor)
                    order.append(successor)
                    queue.append(successor)
                    if len(seen) > limit:
                        raise ResourceBoundExceeded("product graph", limit)
    return order, edges


class _TupleTables:
    """Tables of the output interpretation over (n+1)-tuples."""

    def __init__(self, model: ProtoAlgorithm):
        self.model = model
        self.n = model.n
        self.interp = model.interpretation

    def initial(self, d_i: MaybeValue) -> DataTuple:
        values: List[MaybeValue] = [BOT] * (self.n + 1)
        values[self.model.main_index - 1] = self.interp.apply(INI, d_i)
        return tuple(values)

    def apply(self, symbol: str, index: int, values: DataTuple) -> DataTuple:
        kind = self.model.alphabet.kind_of(symbol)
        slot = index - 1
        updated = list(values)
        if kind is SymbolKind.SETTING:
            updated[self.n] = self.interp.apply(symbol, values[slot], values[self.n])
        elif kind is SymbolKind.GETTING:
            updated[slot] = self.interp.apply(symbol, values[slot], values[self.n])
        else:
            updated[slot] = self.interp.apply(symbol, values[slot])
        return tuple(updated)

    def test(self, symbol: str, index: int, values: DataTuple) -> MaybeValue:
        return self.interp.apply(symbol, values[index - 1])

    def finish(self, values: DataTuple) -> MaybeValue:
        return self.interp.apply(FIN, values[self.model.main_index - 1])


def _data_closure(
    model: ProtoAlgorithm, tables: _TupleTables, symbols: Mapping[Tuple[str, int], str], limit: int
) -> List[DataTuple]:
    functions = [
        (symbol, index)
        for (symbol, index) in symbols
        if symbol not in model.alphabet.predicate
    ]
    order: List[DataTuple] = []
    seen = set()
    queue = deque()

    def add(values: DataTuple) -> None:
        if values not in seen:
            seen.add(values)
            order.append(values)
            queue.append(values)
            if len(seen) > limit:
                raise ResourceBoundExceeded("sequentialized data domain", limit)

    for d_i in model.interpretation.input_domain:
        add(tables.initial(d_i))
    while queue:
        values = queue.popleft()
        for symbol, index in functions:
            add(tables.apply(symbol, index, values))
    return order


def _output_model(
    model: ProtoAlgorithm,
    symbols: Mapping[Tuple[str, int], str],
    vertices: List[ProductVertex],
    edges: List[Tuple[ProductVertex, ProductVertex, Optional[int]]],
    data: List[DataTuple],
    tables: _TupleTables,
) -> Tuple[ProtoAlgorithm, Dict[ProductVertex, str], Dict[DataTuple, str]]:
    vertex_ids = {vertex: product_vertex_id(vertex) for vertex in vertices}
    if len(set(vertex_ids.values())) != len(vertex_ids):
        raise SequentializationError("product vertex ids collide; rename component vertices")
    tokens = {values: tuple_token(values) for values in data}
    source = model.interpretation

    def output_label(vertex: ProductVertex) -> str:
        vertex_tuple, index = vertex
        label = model.components[index - 1].label(vertex_tuple[index - 1])
        if label in (INI, FIN):
            return label
        return symbols[(label, index)]

    raw_graph = RawComponentGraph(
        vertices=[RawVertex(vertex_ids[v], output_label(v)) for v in vertices],
        edges=[RawEdge(vertex_ids[s], vertex_ids[t], label) for s, t, label in edges],
        root=vertex_ids[vertices[0]],
        main=True,
        nondeterministic=True,
        name="product",
    )

    tests = model.alphabet.predicate
    raw_alphabet = RawAlphabet(
        processing=[INI, FIN]
        + sorted(name for (symbol, _), name in symbols.items() if symbol not in tests),
        predicate=sorted(name for (symbol, _), name in symbols.items() if symbol in tests),
    )

    raw_tables: Dict[str, Dict[object, object]] = {
        INI: {d_i: tokens[tables.initial(d_i)] for d_i in source.input_domain},
        FIN: {tokens[values]: tables.finish(values) for values in data},
    }
    raw_tables[FIN][BOT] = source.apply(FIN, BOT)
    for (symbol, index), name in symbols.items():
        if symbol in model.alphabet.predicate:
            table = {tokens[v]: tables.test(symbol, index, v) for v in data}
            table[BOT] = source.apply(symbol, BOT)
        else:
            table = {tokens[v]: tokens[tables.apply(symbol, index, v)] for v in data}
            table[BOT] = BOT
        raw_tables[name] = table

    raw_interpretation = RawInterpretation(
        main_domain=[tokens[v] for v in data],
        input_domain=list(source.input_domain),
        output_domain=list(source.output_domain),
        tables=raw_tables,
        bottom_policy=BottomPolicy.LIFTED,
    )
    provenance = {
        "source": model.name or "<unnamed>",
        "construction": CONSTRUCTION,
        "version": CONSTRUCTION_VERSION,
    }
    try:
        output = validate_proto_algorithm(
            raw_alphabet,
            [raw_graph],
            raw_interpretation,
            ValidationLevel.LENIENT,
            name=f"{model.name or 'model'}-sequentialized",
            provenance=provenance,
        )
    except ModelValidationError as exc:
        raise SequentializationError(
            "sequentialized model is not well formed: "
            + "; ".join(issue.render() for issue in exc.issues)
        ) from exc
    return output, vertex_ids, tokens


def _certify(
    model: ProtoAlgorithm,
    output: ProtoAlgorithm,
    vertex_ids: Mapping[ProductVertex, str],
    tokens: Mapping[DataTuple, str],
    limit: int,
) -> EquivalenceReport:
    """Relate each source state to its product image and check both directions."""
    left = build_state_graph(model, Variant.ALGORITHMIC, cap=limit)
    right = build_state_graph(output, Variant.ALGORITHMIC, cap=limit)

    def image(state: State) -> State:
        if state.kind is not StateKind.INTERNAL:
            return state
        control = state.control
        assert control is not None
        scheduled = control.scheduled
        vertex: ProductVertex = (tuple(control.vertices), scheduled)  # type: ignore[assignment]
        values: DataTuple = tuple(control.privates) + (control.shared,)
        if vertex not in vertex_ids or values not in tokens:
            raise CertificationFailed(f"state {state.render()} has no product image")
        return State(BOT, Control((vertex_ids[vertex],), (tokens[values],), BOT, 1), BOT)

    pairs = frozenset((state, image(state)) for state in left.states)
    relation = SimulationRelation(Variant.ALGORITHMIC, pairs, left, right)
    problems: List[Issue] = verify_simulation(relation) + verify_simulation(relation.inverse())
    if problems:
        raise CertificationFailed(
            "product bijection is not a bisimulation: " + problems[0].render()
        )
    identity_i = {d: d for d in model.interpretation.input_domain}
    identity_o = {d: d for d in model.interpretation.output_domain}
    return EquivalenceReport(
        kind="equivalence",
        verdict=True,
        variant=Variant.ALGORITHMIC,
        relation=relation,
        gamma_i=identity_i,
        gamma_o=identity_o,
    )


def sequentialize(
    model: ProtoAlgorithm, certify: bool = True, cap: Optional[int] = None
) -> SequentializationResult:
    """
    Compile ``model`` into an algorithmically equivalent single-component model.

    Args:
        model: A validated model using the lifted bottom policy
        certify: Build and check the equivalence certificate
        cap: Bound on product vertices, data tuples and explored states

    Returns:
        The output model with its vertex, symbol and data maps and, when
        requested, the certificate

    Raises:
        SequentializationError: When the model uses the strict policy, indexed
            names collide, or the product reaches no fin vertex
        CertificationFailed: When the certificate does not check
        ResourceBoundExceeded: When the product or an exploration exceeds the cap
    """
    if model.interpretation.bottom_policy is not BottomPolicy.LIFTED:
        raise SequentializationError(
            "sequentialization needs the lifted bottom policy: non-main components "
            "start with BOT data"
        )
    limit = get_state_cap(cap)
    symbols = _indexed_symbols(model)
    vertices, edges = _build_product(model, limit)
    if not any(
        model.components[i - 1].label(vs[i - 1]) == FIN for vs, i in vertices
    ):
        raise SequentializationError("no fin vertex is reachable in the product graph")
    tables = _TupleTables(model)
    data = _data_closure(model, tables, symbols, limit)
    output, vertex_ids, tokens = _output_model(model, symbols, vertices, edges, data, tables)
    logger.info(
        "sequentialized %s: %d product vertices, %d edges, %d data tuples",
        model.name or "<unnamed>",
        len(vertices),
        len(edges),
        len(data),
    )

    certificate = None
    if certify:
        certificate = _certify(model, output, vertex_ids, tokens, limit)
        verdict = check_equivalence(model, output, Variant.ALGORITHMIC, limit)
        if not verdict.verdict:
            raise CertificationFailed(
                "sequentialized model is not algorithmically equivalent to its source"
            )
    return SequentializationResult(
        output=output,
        vertex_map=vertex_ids,
        symbol_map=symbols,
        data_map=tokens,
        certificate=certificate,
    )


@dataclass(frozen=True)
class SequentializationCheck:
    """Outcome of ``check_sequentialization``: certification plus computed-function agreement."""

    holds: bool
    result: SequentializationResult
    mismatches: Tuple[str, ...] = field(default_factory=tuple)


def check_sequentialization(
    model: ProtoAlgorithm, cap: Optional[int] = None
) -> SequentializationCheck:
    """
    Sequentialize ``model`` and compare the computed functions entrywise.

    Definedness, the reason an input is undefined, and the (normative or
    diagnostic) output sets must coincide at every input.
    """
    result = sequentialize(model, certify=True, cap=cap)
    source = computed_function(model, cap)
    target = computed_function(result.output, cap)
    mismatches: List[str] = []
    for d_i, entry in source.entries.items():
        other = target[d_i]
        if (entry.defined, entry.reason, entry.outputs) != (
            other.defined,
            other.reason,
            other.outputs,
        ):
            mismatches.append(
                f"input {d_i}: source defined={entry.defined} outputs="
                f"{entry.sorted_outputs()}, sequentialized defined={other.defined} "
                f"outputs={other.sorted_outputs()}"
            )
    holds = result.certificate is not None and result.certificate.verdict and not mismatches
    for mismatch in mismatches:
        logger.error("computed functions differ: %s", mismatch)
    return SequentializationCheck(holds, result, tuple(mismatches))
