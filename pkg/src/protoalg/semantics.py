"""
Operational semantics of proto-algorithms.

Both step functions are pure and return successors in canonical order, so
every exploration built on them (state graphs, runs, divergence witnesses)
is deterministic. The algorithmic variant makes every component step
observable; the computational variant conceals predicate evaluation by
chaining through consecutive predicate vertices.
"""

import enum
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

import networkx as nx

from .config import DEFAULT_MAX_RUNS, DEFAULT_MAX_STEPS, get_state_cap
from .errors import ResourceBoundExceeded
from .model import (
    BOT,
    FIN,
    INI,
    Control,
    MaybeValue,
    ProtoAlgorithm,
    State,
    StateKind,
    SymbolKind,
    Value,
    sort_states,
    value_key,
)

logger = logging.getLogger(__name__)


class Variant(enum.Enum):
    ALGORITHMIC = "algorithmic"
    COMPUTATIONAL = "computational"


StepFunction = Callable[[ProtoAlgorithm, State], Tuple[State, ...]]


def _defined(model: ProtoAlgorithm, *operands: MaybeValue) -> bool:
    """Under the strict policy a rule fires only on non-BOT operands."""
    if model.interpretation.lifted:
        return True
    return all(operand is not BOT for operand in operands)


def _fan_out(
    model: ProtoAlgorithm,
    control: Control,
    index: int,
    targets: Iterable[str],
    privates: Tuple[MaybeValue, ...],
    shared: MaybeValue,
) -> List[State]:
    """One successor per (out-edge target, next scheduled component)."""
    successors = []
    for target in targets:
        vertices = control.vertices[:index] + (target,) + control.vertices[index + 1 :]
        for scheduled in range(1, model.n + 1):
            successors.append(
                State(BOT, Control(vertices, privates, shared, scheduled), BOT)
            )
    return successors


def _replace(
    values: Tuple[MaybeValue, ...], index: int, value: MaybeValue
) -> Tuple[MaybeValue, ...]:
    return values[:index] + (value,) + values[index + 1 :]


def _initial_successors(model: ProtoAlgorithm, state: State) -> List[State]:
    main = model.main_index - 1
    graph = model.main_component
    datum = model.interpretation.apply(INI, state.d_i)
    start = Control(
        vertices=model.roots,
        privates=(BOT,) * model.n,
        shared=BOT,
        scheduled=BOT,
    )
    privates = _replace(start.privates, main, datum)
    return _fan_out(
        model,
        start,
        main,
        (target for target, _ in graph.out_edges[graph.root]),
        privates,
        BOT,
    )


def _internal_successors(model: ProtoAlgorithm, state: State) -> List[State]:
    control = state.control
    if control is None or control.scheduled is BOT:
        return []
    index = int(control.scheduled) - 1  # type: ignore[arg-type]
    vertex = control.vertices[index]
    if vertex is BOT:
        return []
    graph = model.components[index]
    label = graph.label(vertex)  # type: ignore[arg-type]
    kind = model.alphabet.kind_of(label)
    interp = model.interpretation
    private = control.privates[index]
    targets = [target for target, _ in graph.out_edges[vertex]]  # type: ignore[index]

    if label == INI:
        return []
    if label == FIN:
        if not _defined(model, private):
            return []
        return [State.final(interp.apply(FIN, private))]  # type: ignore[arg-type]
    if kind is SymbolKind.PROCESSING:
        if not _defined(model, private):
            return []
        privates = _replace(control.privates, index, interp.apply(label, private))
        return _fan_out(model, control, index, targets, privates, control.shared)
    if kind is SymbolKind.SETTING:
        if not _defined(model, private, control.shared):
            return []
        shared = interp.apply(label, private, control.shared)
        return _fan_out(model, control, index, targets, control.privates, shared)
    if kind is SymbolKind.GETTING:
        if not _defined(model, private, control.shared):
            return []
        privates = _replace(
            control.privates, index, interp.apply(label, private, control.shared)
        )
        return _fan_out(model, control, index, targets, privates, control.shared)

    # predicate: follow the edge carrying the evaluated bit, keep the schedule
    if not _defined(model, private):
        return []
    bit = interp.apply(label, private)
    for target, edge_label in graph.out_edges[vertex]:  # type: ignore[index]
        if edge_label == bit:
            vertices = _replace(control.vertices, index, target)  # type: ignore[arg-type]
            moved = Control(vertices, control.privates, control.shared, control.scheduled)  # type: ignore[arg-type]
            return [State(BOT, moved, BOT)]  # type: ignore[arg-type]
    return []


def algorithmic_step(model: ProtoAlgorithm, state: State) -> Tuple[State, ...]:
    """
    Successor states under the algorithmic semantics.

    Args:
        model: A validated proto-algorithm
        state: A well-formed state of ``model``

    Returns:
        Canonically ordered successors; empty means the state is stuck
    """
    kind = state.kind
    if kind is StateKind.FINAL:
        return (state,)
    if kind is StateKind.INITIAL:
        return tuple(sort_states(_initial_successors(model, state)))
    return tuple(sort_states(_internal_successors(model, state)))


def _at_predicate(model: ProtoAlgorithm, state: State) -> bool:
    control = state.control
    if control is None or control.scheduled is BOT:
        return False
    index = int(control.scheduled) - 1  # type: ignore[arg-type]
    vertex = control.vertices[index]
    if vertex is BOT:
        return False
    label = model.components[index].label(vertex)  # type: ignore[arg-type]
    return label in model.alphabet.predicate


def computational_step(model: ProtoAlgorithm, state: State) -> Tuple[State, ...]:
    """
    Successor states under the computational semantics.

    A state scheduled at a predicate vertex has the successors of the state
    its predicate edge leads to; otherwise this agrees with
    ``algorithmic_step``.
    """
    current = state
    while _at_predicate(model, current):
        advanced = algorithmic_step(model, current)
        if not advanced:
            return ()
        (current,) = advanced
    return algorithmic_step(model, current)


def step_function(variant: Variant) -> StepFunction:
    if variant is Variant.ALGORITHMIC:
        return algorithmic_step
    return computational_step


@dataclass
class StateGraph:
    """
    The reachable part of a model's state space.

    ``states`` is in canonical order, and ``index`` maps each state to its
    position there. All final states of the output domain are included,
    whether reachable or not.
    """

    variant: Variant
    states: Tuple[State, ...]
    successors: Mapping[State, Tuple[State, ...]]
    initial_inputs: Tuple[Value, ...]
    model_name: Optional[str] = None
    index: Dict[State, int] = field(init=False, repr=False)
    succ_ids: List[Tuple[int, ...]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.index = {state: i for i, state in enumerate(self.states)}
        self.succ_ids = [
            tuple(self.index[t] for t in self.successors[s]) for s in self.states
        ]

    def __len__(self) -> int:
        return len(self.states)

    def __contains__(self, state: object) -> bool:
        return state in self.index

    @property
    def stuck(self) -> Tuple[State, ...]:
        """Reachable states without successors."""
        return tuple(s for s in self.states if not self.successors[s])

    def of_kind(self, kind: StateKind) -> Tuple[State, ...]:
        return tuple(s for s in self.states if s.kind is kind)

    @property
    def edge_count(self) -> int:
        return sum(len(targets) for targets in self.successors.values())

    def summary(self) -> Dict[str, int]:
        """State counts by kind, plus edge and stuck counts."""
        counts = {kind.value: 0 for kind in StateKind}
        for state in self.states:
            counts[state.kind.value] += 1
        counts["total"] = len(self.states)
        counts["edges"] = self.edge_count
        counts["stuck"] = len(self.stuck)
        return counts

    def to_networkx(self) -> nx.DiGraph:
        """The graph over State nodes, with a ``kind`` node attribute."""
        graph = nx.DiGraph()
        for state in self.states:
            graph.add_node(state, kind=state.kind.value)
        for state in self.states:
            for target in self.successors[state]:
                graph.add_edge(state, target)
        return graph


def build_state_graph(
    model: ProtoAlgorithm,
    variant: Variant = Variant.ALGORITHMIC,
    initial_inputs: Optional[Iterable[Value]] = None,
    cap: Optional[int] = None,
) -> StateGraph:
    """
    Explore the states reachable from the initial states of the given inputs.

    Args:
        model: A validated proto-algorithm
        variant: Which step function to use
        initial_inputs: Inputs to start from; all of the input domain by default
        cap: State-count cap; resolved through ``config.get_state_cap``

    Returns:
        The state graph, including every final state of the output domain

    Raises:
        ResourceBoundExceeded: When more than ``cap`` states are discovered
    """
    limit = get_state_cap(cap)
    step = step_function(variant)
    interp = model.interpretation
    inputs = tuple(interp.input_domain if initial_inputs is None else initial_inputs)

    successors: Dict[State, Tuple[State, ...]] = {}
    queue = deque()
    seen = set()

    def discover(state: State) -> None:
        if state not in seen:
            seen.add(state)
            queue.append(state)
            if len(seen) > limit:
                raise ResourceBoundExceeded(f"{variant.value} state graph", limit)

    for d_i in inputs:
        discover(State.initial(d_i))
    for d_o in interp.output_domain:
        discover(State.final(d_o))

    while queue:
        state = queue.popleft()
        targets = step(model, state)
        successors[state] = targets
        for target in targets:
            discover(target)

    graph = StateGraph(
        variant=variant,
        states=tuple(sort_states(seen)),
        successors=successors,
        initial_inputs=inputs,
        model_name=model.name,
    )
    logger.debug(
        "built %s state graph of %s: %s",
        variant.value,
        model.name or "<unnamed>",
        graph.summary(),
    )
    return graph


class Terminal(enum.Enum):
    """How an enumerated run ends."""

    FINAL = "final"
    STUCK = "stuck"
    CUTOFF = "cutoff"
    LASSO = "lasso"


@dataclass(frozen=True)
class Run:
    """
    A finite run, or a lasso standing for an infinite one.

    For a LASSO, the run continues from ``states[-1]`` back to
    ``states[loop_start]`` forever.
    """

    states: Tuple[State, ...]
    terminal: Terminal
    variant: Variant = Variant.ALGORITHMIC
    loop_start: Optional[int] = None

    def __len__(self) -> int:
        return len(self.states)

    @property
    def steps(self) -> int:
        return len(self.states) - 1

    def render(self) -> List[str]:
        return [state.render() for state in self.states]


def enumerate_runs(
    model: ProtoAlgorithm,
    d_i: Value,
    variant: Variant = Variant.ALGORITHMIC,
    max_steps: int = DEFAULT_MAX_STEPS,
    max_runs: int = DEFAULT_MAX_RUNS,
) -> List[Run]:
    """
    Enumerate every maximal run from the initial state of ``d_i``.

    A run stops at a final state (FINAL), at a state without successors
    (STUCK), when it would revisit a state of its own path (LASSO) or after
    ``max_steps`` steps (CUTOFF). The final state's self-loop is not unrolled.

    Raises:
        ResourceBoundExceeded: When more than ``max_runs`` runs exist
    """
    step = step_function(variant)
    runs: List[Run] = []

    def emit(run: Run) -> None:
        runs.append(run)
        if len(runs) > max_runs:
            raise ResourceBoundExceeded("run enumeration", max_runs)

    start = State.initial(d_i)
    stack: List[Tuple[Tuple[State, ...], Dict[State, int]]] = [((start,), {start: 0})]
    while stack:
        path, positions = stack.pop()
        last = path[-1]
        if last.kind is StateKind.FINAL:
            emit(Run(path, Terminal.FINAL, variant))
            continue
        targets = step(model, last)
        if not targets:
            emit(Run(path, Terminal.STUCK, variant))
            continue
        if len(path) - 1 >= max_steps:
            emit(Run(path, Terminal.CUTOFF, variant))
            continue
        extensions = []
        for target in targets:
            if target in positions:
                emit(Run(path, Terminal.LASSO, variant, loop_start=positions[target]))
            else:
                extended = dict(positions)
                extended[target] = len(path)
                extensions.append((path + (target,), extended))
        stack.extend(reversed(extensions))
    return runs


def output_value(run: Run) -> Optional[Value]:
    """The first non-BOT output of a run, or None when it has none."""
    for state in run.states:
        if state.d_o is not BOT:
            return state.d_o  # type: ignore[return-value]
    return None


@dataclass(frozen=True)
class DivergenceVerdict:
    """Divergence and stuckness of the runs from one input."""

    d_i: Value
    divergent: bool
    witness: Optional[Run]
    stuck: Tuple[State, ...]

    @property
    def stuck_reachable(self) -> bool:
        return bool(self.stuck)


def _lasso_witness(graph: StateGraph, full: nx.DiGraph, start: State) -> Optional[Run]:
    """A lasso through internal states reachable from ``start``, if any."""
    internal = full.subgraph(
        [s for s in graph.states if s.kind is StateKind.INTERNAL]
    )
    sources = [t for t in graph.successors[start] if t.kind is StateKind.INTERNAL]
    if not sources:
        return None
    try:
        cycle_edges = nx.find_cycle(internal, source=sources)
    except nx.NetworkXNoCycle:
        return None
    cycle = [source for source, _ in cycle_edges]
    stem = nx.shortest_path(full, start, cycle[0])
    return Run(
        states=tuple(stem) + tuple(cycle[1:]),
        terminal=Terminal.LASSO,
        variant=graph.variant,
        loop_start=len(stem) - 1,
    )


def divergence_analysis(
    model: ProtoAlgorithm, d_i: Value, cap: Optional[int] = None
) -> DivergenceVerdict:
    """
    Decide whether an infinite algorithmic run leaves ``d_i``.

    A run is infinite exactly when it reaches a cycle of internal states;
    the witness is a lasso (stem plus cycle) found deterministically.
    Reachable stuck states are reported separately.
    """
    graph = build_state_graph(model, Variant.ALGORITHMIC, [d_i], cap)
    witness = _lasso_witness(graph, graph.to_networkx(), State.initial(d_i))
    return DivergenceVerdict(d_i, witness is not None, witness, graph.stuck)


@dataclass(frozen=True)
class FunctionEntry:
    """
    The computed function at one input.

    ``outputs`` is normative when ``defined``; otherwise it lists the
    outputs of those runs that did terminate, for diagnostics only.
    """

    d_i: Value
    defined: bool
    outputs: FrozenSet[Value]
    reason: Optional[str] = None
    witness: Optional[Run] = None
    stuck: Tuple[State, ...] = ()

    def sorted_outputs(self) -> List[Value]:
        return sorted(self.outputs, key=value_key)


@dataclass(frozen=True)
class ComputedFunction:
    """The (possibly multi-valued, possibly partial) function a model computes."""

    entries: Mapping[Value, FunctionEntry]

    def __getitem__(self, d_i: Value) -> FunctionEntry:
        return self.entries[d_i]

    def __iter__(self):
        return iter(self.entries)

    @property
    def defined_inputs(self) -> List[Value]:
        return [d for d, entry in self.entries.items() if entry.defined]

    def is_total(self) -> bool:
        return all(entry.defined for entry in self.entries.values())


def computed_function(
    model: ProtoAlgorithm,
    cap: Optional[int] = None,
    inputs: Optional[Iterable[Value]] = None,
) -> ComputedFunction:
    """
    Compute the function of ``model`` over ``inputs``, by default its whole
    input domain.

    An input is UNDEFINED when some run from it diverges (reason
    ``DIVERGENT``) or gets stuck (reason ``STUCK``); otherwise its value is
    the set of outputs of all runs.
    """
    entries: Dict[Value, FunctionEntry] = {}
    for d_i in model.interpretation.input_domain if inputs is None else inputs:
        graph = build_state_graph(model, Variant.ALGORITHMIC, [d_i], cap)
        full = graph.to_networkx()
        start = State.initial(d_i)
        outputs = frozenset(
            s.d_o for s in nx.descendants(full, start) if s.kind is StateKind.FINAL
        )
        witness = _lasso_witness(graph, full, start)
        stuck = graph.stuck
        if witness is not None:
            reason: Optional[str] = "DIVERGENT"
        elif stuck:
            reason = "STUCK"
        else:
            reason = None
        entries[d_i] = FunctionEntry(
            d_i=d_i,
            defined=reason is None,
            outputs=outputs,  # type: ignore[arg-type]
            reason=reason,
            witness=witness,
            stuck=stuck,
        )
        logger.debug(
            "input %s: defined=%s outputs=%s", d_i, reason is None, sorted(map(str, outputs))
        )
    return ComputedFunction(entries)

