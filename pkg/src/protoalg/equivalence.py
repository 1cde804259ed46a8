"""
Simulation, equivalence and isomorphism of proto-algorithms.

Simulations are decided by computing the greatest relation that respects
state kinds and the transfer condition, then checking initial and final
coverage. Isomorphism is decided by a structural search over component
orders and per-component graph isomorphisms, followed by a backtracking
search for the data bijections.
"""

import itertools
import logging
from collections import defaultdict, deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import (
    Any,
    Dict,
    FrozenSet,
    Iterable,
    Iterator,
    List,
    Mapping,
    Optional,
    Set,
    Tuple,
)

import networkx as nx
from networkx.algorithms import isomorphism

from .config import get_state_cap
from .errors import Issue, NotASimulation, ResourceBoundExceeded
from .model import (
    BOT,
    FIN,
    INI,
    MaybeValue,
    ProtoAlgorithm,
    State,
    StateKind,
    Value,
    value_key,
)
from .semantics import (
    Run,
    StateGraph,
    Terminal,
    Variant,
    build_state_graph,
    computed_function,
    enumerate_runs,
)

logger = logging.getLogger(__name__)

Pair = Tuple[State, State]


@dataclass(frozen=True)
class SimulationRelation:
    """
    A relation between the states of two models, with the graphs it was
    computed over. Only ``variant`` and ``pairs`` take part in equality.
    """

    variant: Variant
    pairs: FrozenSet[Pair]
    left: StateGraph = field(compare=False, repr=False)
    right: StateGraph = field(compare=False, repr=False)

    def __contains__(self, pair: object) -> bool:
        return pair in self.pairs

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[Pair]:
        return iter(self.sorted_pairs())

    def inverse(self) -> "SimulationRelation":
        return SimulationRelation(
            self.variant,
            frozenset((t, s) for s, t in self.pairs),
            self.right,
            self.left,
        )

    def union(self, other: "SimulationRelation") -> "SimulationRelation":
        return SimulationRelation(self.variant, self.pairs | other.pairs, self.left, self.right)

    def without(self, pair: Pair) -> "SimulationRelation":
        return SimulationRelation(self.variant, self.pairs - {pair}, self.left, self.right)

    @cached_property
    def _partners(self) -> Dict[State, List[State]]:
        partners: Dict[State, List[State]] = defaultdict(list)
        for s, t in self.pairs:
            partners[s].append(t)
        return {s: sorted(ts, key=State.sort_key) for s, ts in partners.items()}

    def partners(self, state: State) -> List[State]:
        """Right-hand states related to ``state``, canonically ordered."""
        return self._partners.get(state, [])

    def sorted_pairs(self) -> List[Pair]:
        return sorted(self.pairs, key=lambda p: (p[0].sort_key(), p[1].sort_key()))


def _predecessors(graph: StateGraph) -> List[List[int]]:
    preds: List[List[int]] = [[] for _ in graph.states]
    for source, targets in enumerate(graph.succ_ids):
        for target in targets:
            preds[target].append(source)
    return preds


def _greatest_fixed_point(
    left: StateGraph, right: StateGraph, symmetric: bool, limit: int
) -> Set[Tuple[int, int]]:
    """
    Largest kind-respecting relation closed under transfer.

    With ``symmetric`` the transfer condition is required in both
    directions, which yields the greatest bisimulation.
    """
    by_kind: Dict[StateKind, List[int]] = defaultdict(list)
    for j, state in enumerate(right.states):
        by_kind[state.kind].append(j)

    relation: Set[Tuple[int, int]] = set()
    for i, state in enumerate(left.states):
        partners = by_kind[state.kind]
        if len(relation) + len(partners) > limit:
            raise ResourceBoundExceeded("candidate relation", limit)
        relation.update((i, j) for j in partners)

    succ_l, succ_r = left.succ_ids, right.succ_ids
    pred_l, pred_r = _predecessors(left), _predecessors(right)

    def transfers(i: int, j: int) -> bool:
        for t in succ_l[i]:
            if not any((t, u) in relation for u in succ_r[j]):
                return False
        if symmetric:
            for u in succ_r[j]:
                if not any((t, u) in relation for t in succ_l[i]):
                    return False
        return True

    queue = deque(sorted(relation))
    queued = set(relation)
    removed = 0
    while queue:
        pair = queue.popleft()
        queued.discard(pair)
        if pair not in relation or transfers(*pair):
            continue
        relation.discard(pair)
        removed += 1
        i, j = pair
        for p in pred_l[i]:
            for q in pred_r[j]:
                candidate = (p, q)
                if candidate in relation and candidate not in queued:
                    queued.add(candidate)
                    queue.append(candidate)
    logger.debug(
        "fixed point: %d pair(s) kept, %d removed (symmetric=%s)",
        len(relation),
        removed,
        symmetric,
    )
    return relation


def _to_relation(
    ids: Iterable[Tuple[int, int]], left: StateGraph, right: StateGraph
) -> SimulationRelation:
    pairs = frozenset((left.states[i], right.states[j]) for i, j in ids)
    return SimulationRelation(left.variant, pairs, left, right)


def _coverage_issues(relation: SimulationRelation, both_ways: bool) -> List[Issue]:
    issues: List[Issue] = []
    related_left = {s for s, _ in relation.pairs}
    related_right = {t for _, t in relation.pairs}

    def require(
        graph: StateGraph, kind: StateKind, related: Set[State], code: str, side: str
    ) -> None:
        for state in graph.of_kind(kind):
            if state not in related:
                issues.append(
                    Issue(
                        code,
                        f"{kind.value} state {state.render()} of the {side} model "
                        "is related to no state",
                        None,
                        state,
                    )
                )

    require(relation.left, StateKind.INITIAL, related_left, "InitialNotCovered", "simulated")
    require(relation.right, StateKind.FINAL, related_right, "FinalNotCovered", "simulating")
    if both_ways:
        require(relation.right, StateKind.INITIAL, related_right, "InitialNotCovered", "simulating")
        require(relation.left, StateKind.FINAL, related_left, "FinalNotCovered", "simulated")
    return issues


def verify_simulation(relation: SimulationRelation, check_coverage: bool = True) -> List[Issue]:
    """
    Check every simulation condition of ``relation`` independently.

    Args:
        relation: The relation and the two state graphs it relates
        check_coverage: Also check initial and final coverage

    Returns:
        One issue per violated condition; empty when ``relation`` is a simulation
    """
    issues: List[Issue] = []
    left, right = relation.left, relation.right
    for s, t in relation.sorted_pairs():
        if s not in left or t not in right:
            issues.append(
                Issue(
                    "UnknownState",
                    f"pair ({s.render()}, {t.render()}) names a state outside the graphs",
                    None,
                    (s, t),
                )
            )
            continue
        if s.kind is not t.kind:
            issues.append(
                Issue(
                    "KindMismatch",
                    f"{s.render()} is {s.kind.value} but {t.render()} is {t.kind.value}",
                    None,
                    (s, t),
                )
            )
        for successor in left.successors[s]:
            if not any((successor, u) in relation.pairs for u in right.successors[t]):
                issues.append(
                    Issue(
                        "TransferViolated",
                        f"step {s.render()} -> {successor.render()} has no matching "
                        f"step from {t.render()}",
                        None,
                        (s, t, successor),
                    )
                )
    if check_coverage:
        issues.extend(_coverage_issues(relation, both_ways=False))
    return issues


def greatest_simulation(
    left: ProtoAlgorithm,
    right: ProtoAlgorithm,
    variant: Variant = Variant.ALGORITHMIC,
    cap: Optional[int] = None,
) -> Optional[SimulationRelation]:
    """
    The greatest simulation of ``left`` by ``right``, or None when it fails coverage.

    Raises:
        ResourceBoundExceeded: When a state graph or the candidate relation
            exceeds the cap
    """
    limit = get_state_cap(cap)
    g_left = build_state_graph(left, variant, cap=limit)
    g_right = build_state_graph(right, variant, cap=limit)
    relation = _to_relation(_greatest_fixed_point(g_left, g_right, False, limit), g_left, g_right)
    if _coverage_issues(relation, both_ways=False):
        return None
    return relation


@dataclass(frozen=True)
class IsomorphismWitness:
    """
    The bijections of an isomorphism. Component indices are 1-based and
    ``vertices`` is keyed by the source component's index.
    """

    components: Mapping[int, int]
    vertices: Mapping[int, Mapping[str, str]]
    symbols: Mapping[str, str]
    edge_labels: Mapping[int, int]
    data: Mapping[Value, Value]
    inputs: Mapping[Value, Value]
    outputs: Mapping[Value, Value]

    @property
    def swaps_edge_labels(self) -> bool:
        return self.edge_labels[0] == 1

    def as_dict(self) -> Dict[str, Any]:
        def tokens(mapping: Mapping[Any, Any]) -> Dict[str, str]:
            ordered = sorted(mapping.items(), key=lambda kv: value_key(kv[0]))
            return {str(k): str(v) for k, v in ordered}

        return {
            "components": {str(k): v for k, v in sorted(self.components.items())},
            "vertices": {str(k): dict(sorted(m.items())) for k, m in sorted(self.vertices.items())},
            "symbols": dict(sorted(self.symbols.items())),
            "edge_labels": {str(k): v for k, v in sorted(self.edge_labels.items())},
            "data": tokens(self.data),
            "inputs": tokens(self.inputs),
            "outputs": tokens(self.outputs),
        }


@dataclass(frozen=True)
class EquivalenceReport:
    """
    Verdict of a simulation, equivalence or isomorphism check.

    ``relation`` holds the computed greatest relation also for negative
    verdicts, as a diagnostic; ``failures`` names the conditions that failed.
    """

    kind: str
    verdict: bool
    variant: Optional[Variant] = None
    relation: Optional[SimulationRelation] = None
    isomorphism: Optional[IsomorphismWitness] = None
    gamma_i: Mapping[Value, Value] = field(default_factory=dict)
    gamma_o: Mapping[Value, Value] = field(default_factory=dict)
    failures: Tuple[Issue, ...] = ()


def extract_translations(
    relation: SimulationRelation,
) -> Tuple[Dict[Value, Value], Dict[Value, Value]]:
    """
    γ_i and γ_o read off the initial and final pairs of ``relation``,
    choosing the lowest canonical partner where several exist.
    """
    gamma_i: Dict[Value, Value] = {}
    for state in relation.left.of_kind(StateKind.INITIAL):
        partners = relation.partners(state)
        if partners:
            gamma_i[state.d_i] = partners[0].d_i  # type: ignore[index,assignment]
    gamma_o: Dict[Value, Value] = {}
    for s, t in relation.sorted_pairs():
        if t.kind is StateKind.FINAL and t.d_o not in gamma_o:
            gamma_o[t.d_o] = s.d_o  # type: ignore[index,assignment]
    return gamma_i, dict(sorted(gamma_o.items(), key=lambda kv: value_key(kv[0])))


def check_simulation(
    left: ProtoAlgorithm,
    right: ProtoAlgorithm,
    variant: Variant = Variant.ALGORITHMIC,
    cap: Optional[int] = None,
) -> EquivalenceReport:
    """Decide whether ``left`` is simulated by ``right``."""
    limit = get_state_cap(cap)
    g_left = build_state_graph(left, variant, cap=limit)
    g_right = build_state_graph(right, variant, cap=limit)
    relation = _to_relation(_greatest_fixed_point(g_left, g_right, False, limit), g_left, g_right)
    failures = _coverage_issues(relation, both_ways=False)
    gamma_i, gamma_o = extract_translations(relation)
    logger.info(
        "%s simulation of %s by %s: %s",
        variant.value,
        left.name or "<left>",
        right.name or "<right>",
        not failures,
    )
    return EquivalenceReport(
        kind="simulation",
        verdict=not failures,
        variant=variant,
        relation=relation,
        gamma_i=gamma_i,
        gamma_o=gamma_o,
        failures=tuple(failures),
    )


def check_equivalence(
    left: ProtoAlgorithm,
    right: ProtoAlgorithm,
    variant: Variant = Variant.ALGORITHMIC,
    cap: Optional[int] = None,
) -> EquivalenceReport:
    """
    Decide algorithmic or computational equivalence.

    The witness is the greatest bisimulation; on a positive verdict it and
    its inverse are re-checked with ``verify_simulation``.

    Raises:
        NotASimulation: When the re-check of a positive witness fails
        ResourceBoundExceeded: When an exploration exceeds the cap
    """
    limit = get_state_cap(cap)
    g_left = build_state_graph(left, variant, cap=limit)
    g_right = build_state_graph(right, variant, cap=limit)
    relation = _to_relation(_greatest_fixed_point(g_left, g_right, True, limit), g_left, g_right)
    failures = _coverage_issues(relation, both_ways=True)
    if not failures:
        for candidate in (relation, relation.inverse()):
            problems = verify_simulation(candidate)
            if problems:
                raise NotASimulation(
                    "bisimulation witness failed re-verification: " + problems[0].render(),
                    problems,
                )
    gamma_i, gamma_o = extract_translations(relation)
    logger.info(
        "%s equivalence of %s and %s: %s",
        variant.value,
        left.name or "<left>",
        right.name or "<right>",
        not failures,
    )
    return EquivalenceReport(
        kind="equivalence",
        verdict=not failures,
        variant=variant,
        relation=relation,
        gamma_i=gamma_i,
        gamma_o=gamma_o,
        failures=tuple(failures),
    )


def _symbol_tag(model: ProtoAlgorithm, label: str) -> str:
    if label in (INI, FIN):
        return label
    kind = model.alphabet.kind_of(label)
    return kind.value if kind is not None else "?"


def _same_shape(left: ProtoAlgorithm, right: ProtoAlgorithm) -> bool:
    a, b = left.alphabet, right.alphabet
    i, j = left.interpretation, right.interpretation
    return (
        left.n == right.n
        and len(a.processing) == len(b.processing)
        and len(a.setting) == len(b.setting)
        and len(a.getting) == len(b.getting)
        and len(a.predicate) == len(b.predicate)
        and len(i.main_domain) == len(j.main_domain)
        and len(i.input_domain) == len(j.input_domain)
        and len(i.output_domain) == len(j.output_domain)
        and i.bottom_policy is j.bottom_policy
        and sorted(len(g.vertices) for g in left.components)
        == sorted(len(g.vertices) for g in right.components)
    )


class _DataMap:
    """Partial bijections on the main and output domains."""

    def __init__(self) -> None:
        self.main: Dict[MaybeValue, MaybeValue] = {BOT: BOT}
        self.main_inverse: Dict[MaybeValue, MaybeValue] = {BOT: BOT}
        self.out: Dict[MaybeValue, MaybeValue] = {}
        self.out_inverse: Dict[MaybeValue, MaybeValue] = {}

    def copy(self) -> "_DataMap":
        other = _DataMap()
        other.main = dict(self.main)
        other.main_inverse = dict(self.main_inverse)
        other.out = dict(self.out)
        other.out_inverse = dict(self.out_inverse)
        return other

    def assign(self, x: MaybeValue, y: MaybeValue, queue: List[MaybeValue]) -> bool:
        if x in self.main:
            return self.main[x] == y
        if y in self.main_inverse:
            return False
        self.main[x] = y
        self.main_inverse[y] = x
        queue.append(x)
        return True

    def assign_output(self, x: MaybeValue, y: MaybeValue) -> bool:
        if x in self.out:
            return self.out[x] == y
        if y in self.out_inverse:
            return False
        self.out[x] = y
        self.out_inverse[y] = x
        return True


class _IsomorphismSearch:
    """Backtracking search for the bijections of an isomorphism."""

    def __init__(self, left: ProtoAlgorithm, right: ProtoAlgorithm, limit: int):
        self.left = left
        self.right = right
        self.limit = limit
        self.nodes = 0
        self.graphs_left = [self._tagged(left, g) for g in left.components]
        self.graphs_right = [self._tagged(right, g) for g in right.components]

    def _tagged(self, model: ProtoAlgorithm, graph: Any) -> nx.DiGraph:
        tagged = graph.to_networkx()
        for v in graph.vertices:
            tagged.nodes[v]["tag"] = _symbol_tag(model, graph.label(v))
        return tagged

    def _tick(self) -> None:
        self.nodes += 1
        if self.nodes > self.limit:
            raise ResourceBoundExceeded("isomorphism search", self.limit)

    def run(self) -> Optional[IsomorphismWitness]:
        for edge_labels in ({0: 0, 1: 1}, {0: 1, 1: 0}):
            for order in self._component_orders():
                found = self._match_components(0, order, edge_labels, {}, [])
                if found is not None:
                    return found
        return None

    def _component_orders(self) -> Iterator[Tuple[int, ...]]:
        n = self.left.n
        main_left = self.left.main_index - 1
        main_right = self.right.main_index - 1
        for order in itertools.permutations(range(n)):
            if order[main_left] != main_right:
                continue
            if any(
                len(self.left.components[k].vertices)
                != len(self.right.components[order[k]].vertices)
                for k in range(n)
            ):
                continue
            yield order

    def _match_components(
        self,
        k: int,
        order: Tuple[int, ...],
        edge_labels: Mapping[int, int],
        symbols: Dict[str, str],
        vertex_maps: List[Dict[str, str]],
    ) -> Optional[IsomorphismWitness]:
        if k == self.left.n:
            return self._complete_symbols(order, edge_labels, symbols, vertex_maps)

        def edge_match(a: Mapping[str, Any], b: Mapping[str, Any]) -> bool:
            label = a.get("label")
            return (None if label is None else edge_labels[label]) == b.get("label")

        matcher = isomorphism.DiGraphMatcher(
            self.graphs_left[k],
            self.graphs_right[order[k]],
            node_match=lambda a, b: a["tag"] == b["tag"],
            edge_match=edge_match,
        )
        source = self.left.components[k]
        target = self.right.components[order[k]]
        for mapping in matcher.isomorphisms_iter():
            self._tick()
            extended = dict(symbols)
            inverse = {b: a for a, b in extended.items()}
            consistent = True
            for v in source.vertices:
                a, b = source.label(v), target.label(mapping[v])
                if extended.get(a, b) != b or inverse.get(b, a) != a:
                    consistent = False
                    break
                extended[a] = b
                inverse[b] = a
            if not consistent:
                continue
            found = self._match_components(
                k + 1, order, edge_labels, extended, vertex_maps + [dict(mapping)]
            )
            if found is not None:
                return found
        return None

    def _complete_symbols(
        self,
        order: Tuple[int, ...],
        edge_labels: Mapping[int, int],
        symbols: Dict[str, str],
        vertex_maps: List[Dict[str, str]],
    ) -> Optional[IsomorphismWitness]:
        a, b = self.left.alphabet, self.right.alphabet
        choices = []
        for left_group, right_group in (
            (a.processing, b.processing),
            (a.setting, b.setting),
            (a.getting, b.getting),
            (a.predicate, b.predicate),
        ):
            unused_left = sorted(s for s in left_group if s not in symbols)
            used_right = set(symbols.values())
            unused_right = sorted(s for s in right_group if s not in used_right)
            if len(unused_left) != len(unused_right):
                return None
            choices.append(
                [dict(zip(unused_left, p)) for p in itertools.permutations(unused_right)]
            )
        for completion in itertools.product(*choices):
            self._tick()
            full = dict(symbols)
            for part in completion:
                full.update(part)
            data = self._match_data(full, edge_labels)
            if data is not None:
                main, inputs, outputs = data
                return IsomorphismWitness(
                    components={k + 1: order[k] + 1 for k in range(self.left.n)},
                    vertices={k + 1: vertex_maps[k] for k in range(self.left.n)},
                    symbols=full,
                    edge_labels=dict(edge_labels),
                    data=main,
                    inputs=inputs,
                    outputs=outputs,
                )
        return None

    def _match_data(
        self, symbols: Mapping[str, str], edge_labels: Mapping[int, int]
    ) -> Optional[Tuple[Dict[Value, Value], Dict[Value, Value], Dict[Value, Value]]]:
        left, right = self.left, self.right
        i, j = left.interpretation, right.interpretation
        lifted = i.lifted
        unary = [(f, symbols[f]) for f in sorted(left.alphabet.f_tilde)]
        binary = [
            (f, symbols[f]) for f in sorted(left.alphabet.setting | left.alphabet.getting)
        ]
        predicates = [(p, symbols[p]) for p in sorted(left.alphabet.predicate)]

        def propagate(state: _DataMap, queue: List[MaybeValue]) -> bool:
            while queue:
                x = queue.pop()
                y = state.main[x]
                if x is BOT and not lifted:
                    continue
                for f, g in unary:
                    if not state.assign(i.apply(f, x), j.apply(g, y), queue):
                        return False
                for p, q in predicates:
                    if edge_labels[i.apply(p, x)] != j.apply(q, y):  # type: ignore[index]
                        return False
                if not state.assign_output(i.apply(FIN, x), j.apply(FIN, y)):
                    return False
                for z, w in list(state.main.items()):
                    if z is BOT and not lifted:
                        continue
                    for f, g in binary:
                        if not state.assign(i.apply(f, x, z), j.apply(g, y, w), queue):
                            return False
                        if not state.assign(i.apply(f, z, x), j.apply(g, w, y), queue):
                            return False
            return True

        def search_main(state: _DataMap) -> Optional[_DataMap]:
            open_values = [x for x in i.main_domain if x not in state.main]
            if not open_values:
                return state
            x = open_values[0]
            for y in j.main_domain:
                if y in state.main_inverse:
                    continue
                self._tick()
                branch = state.copy()
                queue: List[MaybeValue] = []
                if branch.assign(x, y, queue) and propagate(branch, queue):
                    found = search_main(branch)
                    if found is not None:
                        return found
            return None

        inputs_left = list(i.input_domain)

        def search_inputs(
            k: int, state: _DataMap, inputs: Dict[Value, Value]
        ) -> Optional[Tuple[_DataMap, Dict[Value, Value]]]:
            if k == len(inputs_left):
                found = search_main(state)
                return None if found is None else (found, inputs)
            x = inputs_left[k]
            taken = set(inputs.values())
            for y in j.input_domain:
                if y in taken:
                    continue
                self._tick()
                branch = state.copy()
                queue: List[MaybeValue] = []
                if branch.assign(i.apply(INI, x), j.apply(INI, y), queue) and propagate(
                    branch, queue
                ):
                    found = search_inputs(k + 1, branch, {**inputs, x: y})
                    if found is not None:
                        return found
            return None

        start = _DataMap()
        queue: List[MaybeValue] = [BOT] if lifted else []
        if not propagate(start, queue):
            return None
        result = search_inputs(0, start, {})
        if result is None:
            return None
        state, inputs = result
        free_left = [x for x in i.output_domain if x not in state.out]
        free_right = [y for y in j.output_domain if y not in state.out_inverse]
        outputs = dict(state.out)
        outputs.update(zip(free_left, free_right))
        main = {x: y for x, y in state.main.items() if x is not BOT}
        return main, inputs, outputs  # type: ignore[return-value]


def check_isomorphism(
    left: ProtoAlgorithm, right: ProtoAlgorithm, budget: Optional[int] = None
) -> Optional[IsomorphismWitness]:
    """
    Search for an isomorphism between two models.

    Args:
        left: First model
        right: Second model
        budget: Maximum number of search nodes; resolved like the state cap

    Returns:
        A witness whose every bijection commutes with structure and tables,
        or None when the models are not isomorphic

    Raises:
        ResourceBoundExceeded: When the search exceeds its budget
    """
    if not _same_shape(left, right):
        logger.debug("isomorphism rejected by size comparison")
        return None
    search = _IsomorphismSearch(left, right, get_state_cap(budget))
    witness = search.run()
    logger.info(
        "isomorphism of %s and %s: %s (%d search node(s))",
        left.name or "<left>",
        right.name or "<right>",
        witness is not None,
        search.nodes,
    )
    return witness


def verify_isomorphism(
    left: ProtoAlgorithm, right: ProtoAlgorithm, witness: IsomorphismWitness
) -> List[Issue]:
    """Check every clause of ``witness`` directly against both models."""
    issues: List[Issue] = []

    def fail(code: str, message: str, detail: Any = None) -> None:
        issues.append(Issue(code, message, None, detail))

    def bijective(
        mapping: Mapping[Any, Any], source: Iterable[Any], target: Iterable[Any], what: str
    ) -> None:
        if set(mapping) != set(source) or sorted(map(str, mapping.values())) != sorted(
            map(str, target)
        ):
            fail("NotABijection", f"{what} map is not a bijection between the declared sets")

    n = left.n
    bijective(witness.components, range(1, n + 1), range(1, right.n + 1), "component")
    bijective(witness.symbols, left.alphabet.all_symbols, right.alphabet.all_symbols, "symbol")
    for name in (INI, FIN):
        if witness.symbols.get(name) != name:
            fail("ReservedSymbolMoved", f"{name} must map to itself")
    for name, image in witness.symbols.items():
        if left.alphabet.kind_of(name) is not right.alphabet.kind_of(image):
            fail("SymbolClassChanged", f"{name} and {image} belong to different classes")
    if sorted(witness.edge_labels.items()) not in ([(0, 0), (1, 1)], [(0, 1), (1, 0)]):
        fail("NotABijection", "edge-label map must be a permutation of {0, 1}")
    if issues:
        return issues

    for k in range(1, n + 1):
        source = left.components[k - 1]
        target = right.components[witness.components[k] - 1]
        vmap = witness.vertices.get(k, {})
        bijective(vmap, source.vertices, target.vertices, f"vertex (component {k})")
        if set(vmap) != set(source.vertices):
            continue
        if vmap[source.root] != target.root:
            fail("RootNotPreserved", f"component {k}: root does not map to root")
        for v in source.vertices:
            if witness.symbols[source.label(v)] != target.label(vmap[v]):
                fail("LabelNotPreserved", f"component {k}: label of {v} does not commute", v)
        mapped = {
            (vmap[s], vmap[t], None if label is None else witness.edge_labels[label])
            for s, t, label in source.edges
        }
        if mapped != set(target.edges):
            fail("EdgesNotPreserved", f"component {k}: edge sets do not correspond")

    i, j = left.interpretation, right.interpretation
    bijective(witness.data, i.main_domain, j.main_domain, "data")
    bijective(witness.inputs, i.input_domain, j.input_domain, "input")
    bijective(witness.outputs, i.output_domain, j.output_domain, "output")
    if issues:
        return issues

    def beta(value: MaybeValue) -> MaybeValue:
        return BOT if value is BOT else witness.data[value]  # type: ignore[index]

    points: List[MaybeValue] = list(i.main_domain) + ([BOT] if i.lifted else [])
    for d_i in i.input_domain:
        if beta(i.apply(INI, d_i)) != j.apply(INI, witness.inputs[d_i]):
            fail("TableNotPreserved", f"ini at {d_i}", (INI, d_i))
    for d in points:
        if witness.outputs[i.apply(FIN, d)] != j.apply(FIN, beta(d)):  # type: ignore[index]
            fail("TableNotPreserved", f"fin at {d}", (FIN, d))
        for f in sorted(left.alphabet.f_tilde):
            if beta(i.apply(f, d)) != j.apply(witness.symbols[f], beta(d)):
                fail("TableNotPreserved", f"{f} at {d}", (f, d))
        for p in sorted(left.alphabet.predicate):
            label = witness.edge_labels[i.apply(p, d)]  # type: ignore[index]
            if label != j.apply(witness.symbols[p], beta(d)):
                fail("TableNotPreserved", f"{p} at {d}", (p, d))
        for f in sorted(left.alphabet.setting | left.alphabet.getting):
            for e in points:
                if beta(i.apply(f, d, e)) != j.apply(witness.symbols[f], beta(d), beta(e)):
                    fail("TableNotPreserved", f"{f} at ({d}, {e})", (f, d, e))
    return issues


def check_isomorphism_report(
    left: ProtoAlgorithm, right: ProtoAlgorithm, budget: Optional[int] = None
) -> EquivalenceReport:
    witness = check_isomorphism(left, right, budget)
    return EquivalenceReport(
        kind="isomorphism",
        verdict=witness is not None,
        isomorphism=witness,
        gamma_i=dict(witness.inputs) if witness else {},
        gamma_o={v: k for k, v in witness.outputs.items()} if witness else {},
    )


def lift_run(
    relation: SimulationRelation,
    run: Run,
    gamma_i: Optional[Mapping[Value, Value]] = None,
) -> Run:
    """
    Build a run of the simulating model that stays related to ``run``.

    Each step picks the lowest canonical successor related to the next
    state of ``run``; the result has the length of ``run``.

    Raises:
        NotASimulation: When no related successor exists at some step
    """
    if gamma_i is None:
        gamma_i, _ = extract_translations(relation)
    start = run.states[0]
    if start.kind is not StateKind.INITIAL or start.d_i not in gamma_i:
        raise NotASimulation(
            f"run does not start at a translatable initial state: {start.render()}"
        )
    current = State.initial(gamma_i[start.d_i])  # type: ignore[index]
    if (start, current) not in relation.pairs:
        raise NotASimulation(
            f"initial states {start.render()} and {current.render()} are not related",
            (start, current),
        )
    lifted = [current]
    for target in run.states[1:]:
        candidates = relation.right.successors.get(current, ())
        chosen = next((t for t in candidates if (target, t) in relation.pairs), None)
        if chosen is None:
            raise NotASimulation(
                f"no successor of {current.render()} is related to {target.render()}",
                (current, target),
            )
        lifted.append(chosen)
        current = chosen
    terminal = Terminal.FINAL if lifted[-1].kind is StateKind.FINAL else run.terminal
    return Run(tuple(lifted), terminal, relation.variant, run.loop_start)


@dataclass(frozen=True)
class ConsequenceReport:
    """
    Outcome of checking the consequences of a simulation on computed functions.

    ``run_lengths`` is None when it is not claimed (computational variant).
    ``exact_gamma_o`` tells whether the extracted γ_o function alone
    satisfies the output clause.
    """

    definedness: bool
    outputs: bool
    run_lengths: Optional[bool]
    exact_gamma_o: bool
    violations: Tuple[Issue, ...] = ()

    @property
    def holds(self) -> bool:
        return self.definedness and self.outputs and self.run_lengths is not False


def verify_simulation_consequences(
    left: ProtoAlgorithm,
    right: ProtoAlgorithm,
    relation: SimulationRelation,
    gamma_i: Optional[Mapping[Value, Value]] = None,
    gamma_o: Optional[Mapping[Value, Value]] = None,
    cap: Optional[int] = None,
) -> ConsequenceReport:
    """
    Check what a simulation implies about the computed functions.

    Definedness must transfer along γ_i; every output of ``left`` must be
    related by the relation's final pairs to an output of ``right`` at the
    translated input; and for an algorithmic relation every run of a defined
    input must lift to an equally long run of ``right``.
    """
    extracted_i, extracted_o = extract_translations(relation)
    gamma_i = extracted_i if gamma_i is None else gamma_i
    gamma_o = extracted_o if gamma_o is None else gamma_o
    f_left = computed_function(left, cap)
    f_right = computed_function(right, cap)
    violations: List[Issue] = []
    definedness = outputs = exact = True

    for d_i, entry in f_left.entries.items():
        image = f_right[gamma_i[d_i]]
        if entry.defined and not image.defined:
            definedness = False
            violations.append(
                Issue(
                    "DefinednessNotTransferred",
                    f"defined at {d_i} but not at its translation {gamma_i[d_i]}",
                    None,
                    d_i,
                )
            )
        for d_o in entry.sorted_outputs():
            if not any(
                (State.final(d_o), State.final(other)) in relation.pairs
                for other in image.outputs
            ):
                outputs = False
                violations.append(
                    Issue(
                        "OutputNotModeled",
                        f"output {d_o} at input {d_i} has no related output of the "
                        "simulating model",
                        None,
                        (d_i, d_o),
                    )
                )
            if d_o not in {gamma_o.get(other) for other in image.outputs}:
                exact = False

    run_lengths: Optional[bool] = None
    if relation.variant is Variant.ALGORITHMIC:
        run_lengths = True
        limit = get_state_cap(cap)
        for d_i in f_left.defined_inputs:
            runs = enumerate_runs(
                left,
                d_i,
                Variant.ALGORITHMIC,
                max_steps=len(relation.left) + 1,
                max_runs=limit,
            )
            for run in runs:
                lifted = lift_run(relation, run, gamma_i)
                if len(lifted) != len(run):
                    run_lengths = False
                    violations.append(
                        Issue(
                            "RunLengthMismatch",
                            f"run of length {len(run)} from {d_i} lifted to length {len(lifted)}",
                            None,
                            d_i,
                        )
                    )
    for violation in violations:
        logger.error("consequence check: %s", violation.render())
    return ConsequenceReport(definedness, outputs, run_lengths, exact, tuple(violations))

