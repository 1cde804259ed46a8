"""GraphViz export of component graphs and state graphs."""

from typing import Iterator, Union

from .model import ProtoAlgorithm, StateKind
from .semantics import StateGraph

_STATE_SHAPES = {
    StateKind.INITIAL: "box",
    StateKind.INTERNAL: "ellipse",
    StateKind.FINAL: "doublecircle",
}


def _gvquote(text: str) -> str:
    return '"{}"'.format(text.replace("\\", "\\\\").replace('"', r"\""))


def _component_lines(model: ProtoAlgorithm) -> Iterator[str]:
    name = model.name or "model"
    yield f"digraph {_gvquote(name)} {{\n"
    yield "  rankdir=TB;\n"
    for index, graph in enumerate(model.components, start=1):
        title = graph.name or f"component {index}"
        if graph.is_main:
            title += " (main)"
        yield f"  subgraph {_gvquote(f'cluster_{index}')} {{\n"
        yield f"    label={_gvquote(title)};\n"
        for vertex in graph.vertices:
            node = _gvquote(f"{index}:{vertex}")
            label = _gvquote(f"{vertex}:{graph.label(vertex)}")
            if vertex == graph.root:
                yield f"    {node} [label={label} shape=box peripheries=2];\n"
            else:
                yield f"    {node} [label={label}];\n"
        for source, target, edge_label in graph.edges:
            attributes = "" if edge_label is None else f" [label={_gvquote(str(edge_label))}]"
            yield (
                f"    {_gvquote(f'{index}:{source}')} -> "
                f"{_gvquote(f'{index}:{target}')}{attributes};\n"
            )
        yield "  }\n"
    yield "}\n"


def _state_lines(graph: StateGraph) -> Iterator[str]:
    name = graph.model_name or "model"
    yield f"digraph {_gvquote(f'{name} {graph.variant.value}')} {{\n"
    yield "  rankdir=LR;\n"
    stuck = set(graph.stuck)
    for position, state in enumerate(graph.states):
        attributes = f"label={_gvquote(state.render())} shape={_STATE_SHAPES[state.kind]}"
        if state in stuck:
            attributes += ' color=red xlabel="STUCK"'
        yield f"  s{position} [{attributes}];\n"
    for position, targets in enumerate(graph.succ_ids):
        for target in targets:
            yield f"  s{position} -> s{target};\n"
    yield "}\n"


def export_dot(subject: Union[ProtoAlgorithm, StateGraph]) -> str:
    """
    Render a model's component graphs or a state graph as DOT text.

    Component graphs become one cluster each, vertices labeled ``id:symbol``
    with the root drawn as a double box. State graphs label states
    canonically, draw initial states as boxes and final states as double
    circles, and flag stuck states.
    """
    if isinstance(subject, StateGraph):
        return "".join(_state_lines(subject))
    return "".join(_component_lines(subject))
