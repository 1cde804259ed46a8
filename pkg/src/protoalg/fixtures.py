"""
Example models and model generators.

This module builds model documents in code: the two reference models
(``countdown``, a sequential loop, and ``handoff``, a main component
exchanging a value with worker components through the shared datum),
hand-made variants of ``countdown``, document transformers that preserve
or coarsen equivalence, and a seeded random model generator. Documents are
plain ``ModelDocument`` dictionaries; ``load_fixture`` validates them.
"""

import copy
import random
from typing import Any, Callable, Dict, List, Optional

from .model import (
    BOT_TOKEN,
    FIN,
    INI,
    BottomPolicy,
    ProtoAlgorithm,
    ValidationLevel,
    validate_model,
)
from .modelio import FORMAT_VERSION, parse_document
from .schema import MODEL_FORMAT, ComponentEntry, ModelDocument


def _document(
    name: str,
    alphabet: Dict[str, List[str]],
    domains: Dict[str, List[Any]],
    tables: Dict[str, Any],
    components: List[ComponentEntry],
    bottom_policy: BottomPolicy = BottomPolicy.LIFTED,
) -> ModelDocument:
    return {
        "format": MODEL_FORMAT,
        "version": FORMAT_VERSION,
        "name": name,
        "alphabet": alphabet,  # type: ignore[typeddict-item]
        "domains": domains,  # type: ignore[typeddict-item]
        "interpretation": {"bottom_policy": bottom_policy.value, "tables": tables},
        "components": components,
    }


def _unary(domain: List[Any], fn: Callable[[Any], Any], bot: Any = None) -> Dict[str, Any]:
    table = {str(d): fn(d) for d in domain}
    if bot is not None:
        table[BOT_TOKEN] = bot
    return table


def _component(
    root: str,
    labels: Dict[str, str],
    edges: List[tuple],
    name: Optional[str] = None,
    main: bool = False,
) -> ComponentEntry:
    entry: ComponentEntry = {
        "main": main,
        "nondeterministic": False,
        "root": root,
        "vertices": [{"id": v, "label": label} for v, label in labels.items()],
        "edges": [],
    }
    for edge in edges:
        record: Dict[str, Any] = {"source": edge[0], "target": edge[1]}
        if len(edge) > 2:
            record["label"] = edge[2]
        entry["edges"].append(record)  # type: ignore[arg-type]
    if name is not None:
        entry["name"] = name
    return entry


def countdown(n: int = 3) -> ModelDocument:
    """
    A sequential loop decrementing its input down to zero.

    Vertices ``r`` (ini), ``v1`` (z), ``v2`` (dec) and ``v3`` (fin); inputs
    and data range over 0..n and every input computes 0.
    """
    if n < 0:
        raise ValueError("countdown needs n >= 0")
    values = list(range(n + 1))
    tables = {
        INI: _unary(values, lambda d: d),
        FIN: _unary(values, lambda d: 0, bot=0),
        "dec": _unary(values, lambda d: max(d - 1, 0), bot=BOT_TOKEN),
        "z": _unary(values, lambda d: int(d == 0), bot=0),
    }
    graph = _component(
        "r",
        {"r": INI, "v1": "z", "v2": "dec", "v3": FIN},
        [("r", "v1"), ("v1", "v2", 0), ("v1", "v3", 1), ("v2", "v1")],
        name="main",
        main=True,
    )
    return _document(
        f"countdown-{n}",
        {"processing": [INI, FIN, "dec"], "predicate": ["z"]},
        {"main": values, "input": values, "output": [0]},
        tables,
        [graph],
    )


def handoff(workers: int = 1) -> ModelDocument:
    """
    A main component handing its input to workers and waiting for a 2.

    The main component publishes its private datum (``put``), then polls
    the shared datum (``take``) until it reads 2. Each worker reads the
    shared datum, doubles it (saturating at 2) and publishes the result.
    With no fairness the main component can poll forever, so no input has
    a defined value; input 1 can still terminate with output 2.
    """
    if workers < 1:
        raise ValueError("handoff needs at least one worker")
    values = [0, 1, 2]
    main_bot = values + [BOT_TOKEN]
    tables = {
        INI: _unary([0, 1], lambda d: d),
        FIN: _unary(values, lambda d: d, bot=0),
        "dbl": {"0": 0, "1": 2, "2": 2, BOT_TOKEN: BOT_TOKEN},
        "is2": _unary(values, lambda d: int(d == 2), bot=0),
        "put": {str(p): {str(s): p for s in main_bot} for p in main_bot},
        "take": {str(p): {str(s): s for s in main_bot} for p in main_bot},
    }
    components = [
        _component(
            "m0",
            {"m0": INI, "m1": "put", "m2": "take", "m3": "is2", "m4": FIN},
            [("m0", "m1"), ("m1", "m2"), ("m2", "m3"), ("m3", "m4", 1), ("m3", "m2", 0)],
            name="main",
            main=True,
        )
    ]
    for index in range(1, workers + 1):
        components.append(
            _component(
                "w0",
                {"w0": "take", "w1": "dbl", "w2": "put", "w3": "take"},
                [("w0", "w1"), ("w1", "w2"), ("w2", "w3"), ("w3", "w1")],
                name=f"worker{index}",
            )
        )
    return _document(
        f"handoff-{workers}",
        {
            "processing": [INI, FIN, "dbl"],
            "setting": ["put"],
            "getting": ["take"],
            "predicate": ["is2"],
        },
        {"main": values, "input": [0, 1], "output": values},
        tables,
        components,
    )


def f1_unrolled(n: int = 3) -> ModelDocument:
    """``countdown`` with its loop body unrolled once."""
    document = countdown(n)
    document["name"] = f"countdown-{n}-unrolled"
    document["components"][0] = _component(
        "r",
        {"r": INI, "v1": "z", "v2": "dec", "v3": FIN, "v4": "z", "v5": "dec"},
        [
            ("r", "v1"),
            ("v1", "v2", 0),
            ("v1", "v3", 1),
            ("v2", "v4"),
            ("v4", "v5", 0),
            ("v4", "v3", 1),
            ("v5", "v1"),
        ],
        name="main",
        main=True,
    )
    return document


def f1_prime(n: int = 3) -> ModelDocument:
    """``countdown`` testing ``z`` a second time before leaving the loop."""
    document = countdown(n)
    document["name"] = f"countdown-{n}-prime"
    document["components"][0] = _component(
        "r",
        {"r": INI, "v1": "z", "v2": "dec", "v3": FIN, "q": "z"},
        [
            ("r", "v1"),
            ("v1", "v2", 0),
            ("v1", "q", 1),
            ("q", "v3", 1),
            ("q", "v2", 0),
            ("v2", "v1"),
        ],
        name="main",
        main=True,
    )
    return document


def _symbol_kinds(document: ModelDocument) -> Dict[str, str]:
    kinds: Dict[str, str] = {}
    for kind, names in document["alphabet"].items():
        for name in names:  # type: ignore[attr-defined]
            kinds[name] = kind
    return kinds


def rename_document(document: ModelDocument, swap_edge_labels: bool = False) -> ModelDocument:
    """
    An isomorphic copy of ``document`` with everything renamed.

    Vertices get an ``n_`` prefix, symbols other than ini and fin an ``_r``
    suffix, and values become tokens ``m<v>``, ``i<v>`` and ``o<v>`` for the
    main, input and output domains. The main domain and the component list
    are reversed. With ``swap_edge_labels`` predicate edge labels are
    flipped and predicate tables complemented to match.
    """
    source = copy.deepcopy(document)
    kinds = _symbol_kinds(source)
    predicates = set(source["alphabet"].get("predicate", []))

    def symbol(name: str) -> str:
        return name if name in (INI, FIN) else f"{name}_r"

    def token(prefix: str, value: Any) -> str:
        return BOT_TOKEN if value == BOT_TOKEN else f"{prefix}{value}"

    def bit(value: Any) -> Any:
        return 1 - value if swap_edge_labels else value

    tables: Dict[str, Any] = {}
    for name, rows in source["interpretation"]["tables"].items():
        if name == INI:
            table = {token("i", k): token("m", v) for k, v in rows.items()}
        elif name == FIN:
            table = {token("m", k): token("o", v) for k, v in rows.items()}
        elif name in predicates:
            table = {token("m", k): bit(v) for k, v in rows.items()}
        elif kinds.get(name) in ("setting", "getting"):
            table = {
                token("m", k): {token("m", k2): token("m", v) for k2, v in inner.items()}
                for k, inner in rows.items()
            }
        else:
            table = {token("m", k): token("m", v) for k, v in rows.items()}
        tables[symbol(name)] = table

    components = []
    for entry in reversed(source["components"]):
        renamed = dict(entry)
        renamed["root"] = f"n_{entry['root']}"
        renamed["vertices"] = [
            {"id": f"n_{v['id']}", "label": symbol(v["label"])} for v in entry["vertices"]
        ]
        edges = []
        for edge in entry["edges"]:
            record: Dict[str, Any] = {
                "source": f"n_{edge['source']}",
                "target": f"n_{edge['target']}",
            }
            if "label" in edge:
                record["label"] = bit(edge["label"])
            edges.append(record)
        renamed["edges"] = edges
        components.append(renamed)

    domains = source["domains"]
    result = dict(source)
    result["name"] = f"{source.get('name', 'model')}-renamed"
    result["alphabet"] = {
        kind: [symbol(name) for name in names]  # type: ignore[attr-defined]
        for kind, names in source["alphabet"].items()
    }
    result["domains"] = {
        "main": [token("m", v) for v in reversed(domains["main"])],
        "input": [token("i", v) for v in domains["input"]],
        "output": [token("o", v) for v in domains["output"]],
    }
    result["interpretation"] = {
        "bottom_policy": source["interpretation"]["bottom_policy"],
        "tables": tables,
    }
    result["components"] = components
    return result  # type: ignore[return-value]


def unroll_document(document: ModelDocument) -> ModelDocument:
    """
    Split one join vertex so that the loop through it is traversed by a copy.

    The first non-root vertex (in component order) with two or more
    incoming edges gets a copy with the same label and out-edges; its last
    incoming edge is redirected to the copy. The result is algorithmically
    equivalent to the input but has one more vertex.

    Raises:
        ValueError: When no vertex has two incoming edges
    """
    result = copy.deepcopy(document)
    for entry in result["components"]:
        ids = {v["id"] for v in entry["vertices"]}
        for vertex in entry["vertices"]:
            incoming = [e for e in entry["edges"] if e["target"] == vertex["id"]]
            if vertex["id"] == entry["root"] or len(incoming) < 2:
                continue
            twin = f"{vertex['id']}_u"
            while twin in ids:
                twin += "_u"
            entry["vertices"].append({"id": twin, "label": vertex["label"]})
            outgoing = [e for e in entry["edges"] if e["source"] == vertex["id"]]
            for edge in outgoing:
                record = dict(edge)
                record["source"] = twin
                entry["edges"].append(record)  # type: ignore[arg-type]
            incoming[-1]["target"] = twin
            result["name"] = f"{document.get('name', 'model')}-unrolled"
            return result
    raise ValueError("no vertex has two incoming edges")


def double_predicate_document(document: ModelDocument) -> ModelDocument:
    """
    Insert an always-true predicate test in front of the main fin vertex.

    The test is concealed by the computational semantics but adds a step
    to every terminating algorithmic run, so the result is computationally
    but not algorithmically equivalent to the input.

    Raises:
        ValueError: When the main component has no function vertex besides its root
    """
    result = copy.deepcopy(document)
    kinds = _symbol_kinds(result)
    name = "chk"
    while name in kinds:
        name += "_"
    main = next(entry for entry in result["components"] if entry.get("main"))
    labels = {v["id"]: v["label"] for v in main["vertices"]}
    fin = next(v for v, label in labels.items() if label == FIN)
    retry = next(
        (
            v
            for v, label in labels.items()
            if v != main["root"]
            and label != FIN
            and kinds.get(label) != "predicate"
        ),
        None,
    )
    if retry is None:
        raise ValueError("main component has no function vertex to return to")
    vertex = f"{fin}_chk"
    while vertex in labels:
        vertex += "_"

    for edge in main["edges"]:
        if edge["target"] == fin:
            edge["target"] = vertex
    main["vertices"].append({"id": vertex, "label": name})
    main["edges"].append({"source": vertex, "target": fin, "label": 1})
    main["edges"].append({"source": vertex, "target": retry, "label": 0})

    result["alphabet"]["predicate"] = list(result["alphabet"].get("predicate", [])) + [name]
    lifted = result["interpretation"]["bottom_policy"] == BottomPolicy.LIFTED.value
    result["interpretation"]["tables"][name] = _unary(
        result["domains"]["main"], lambda d: 1, bot=1 if lifted else None
    )
    result["name"] = f"{document.get('name', 'model')}-doubled"
    return result


def _closure(ini_images: List[int], unary: List[Dict[int, Any]]) -> List[int]:
    closed = set(ini_images)
    frontier = list(closed)
    while frontier:
        value = frontier.pop()
        for table in unary:
            image = table[value]
            if image != BOT_TOKEN and image not in closed:
                closed.add(image)
                frontier.append(image)
    return sorted(closed)


def _chain(
    rng: random.Random,
    labels: List[str],
    functions: List[str],
    predicates: List[str],
    first: int,
    exit_index: Optional[int],
) -> List[tuple]:
    """
    Edges of a chain ``0 -> 1 -> ... -> len(labels) - 1``.

    A predicate at ``t`` keeps one edge to ``t + 1`` and sends the other
    either to ``exit_index`` or back to some ``s >= first`` such that a
    function vertex lies in ``s..t - 1``. A predicate without such a target
    is relabeled as a function, in place.
    """
    edges: List[tuple] = []
    last = len(labels) - 1
    for t in range(last):
        if labels[t] not in predicates:
            edges.append((t, t + 1))
            continue
        latest_function = max(
            (i for i in range(first, t) if labels[i] not in predicates), default=None
        )
        targets = [] if latest_function is None else list(range(first, latest_function + 1))
        if exit_index is not None and exit_index != t + 1:
            targets.append(exit_index)
        if not targets:
            labels[t] = rng.choice(functions)
            edges.append((t, t + 1))
            continue
        forward = rng.randint(0, 1)
        edges.append((t, t + 1, forward))
        edges.append((t, rng.choice(targets), 1 - forward))
    return edges


def random_document(
    seed: int, components: int = 1, domain_size: int = 3, body: int = 3
) -> ModelDocument:
    """
    A seeded random model of the lifted policy, valid at the strict level.

    The main component is a chain ``ini, b_1..b_body, fin``; other
    components are chains of ``body + 1`` vertices whose last vertex loops
    back to the second. Predicates branch forward and either back over a
    function vertex or, in the main component, to fin. The main domain is
    cut down to the closure of the ``ini`` image. With more than one
    component the alphabet has a projection pair ``put``/``take``.

    Args:
        seed: Random seed; equal seeds give equal documents
        components: Number of component graphs
        domain_size: Size of the main domain before the closure cut
        body: Number of body vertices per component
    """
    if components < 1 or domain_size < 1 or body < 1:
        raise ValueError("components, domain_size and body must be positive")
    rng = random.Random(seed)
    values = list(range(domain_size))
    inputs = list(range(rng.randint(1, min(2, domain_size))))
    processing = ["f", "g"]
    predicates = ["p", "q"]
    binary = ["put", "take"] if components > 1 else []
    functions = processing + binary

    ini = {d: rng.choice(values) for d in inputs}
    f = {d: rng.choice(values) for d in values}
    g = {d: rng.choice(values) for d in values}
    main = _closure(list(ini.values()), [f, g])
    f_bot = rng.choice(main + [BOT_TOKEN])

    main_bot = main + [BOT_TOKEN]
    tables: Dict[str, Any] = {
        INI: {str(d): v for d, v in ini.items()},
        FIN: _unary(main, lambda d: rng.randint(0, 1), bot=0),
        "f": _unary(main, lambda d: f[d], bot=f_bot),
        "g": _unary(main, lambda d: g[d], bot=BOT_TOKEN),
        "p": _unary(main, lambda d: rng.randint(0, 1), bot=rng.randint(0, 1)),
        "q": _unary(main, lambda d: rng.randint(0, 1), bot=rng.randint(0, 1)),
    }
    if binary:
        tables["put"] = {str(a): {str(b): a for b in main_bot} for a in main_bot}
        tables["take"] = {str(a): {str(b): b for b in main_bot} for a in main_bot}

    def main_graph() -> ComponentEntry:
        labels = [INI] + [rng.choice(functions + predicates) for _ in range(body)] + [FIN]
        edges = _chain(rng, labels, functions, predicates, 1, len(labels) - 1)
        return _numbered("b", labels, edges, name="main", main=True)

    def other_graph(index: int) -> ComponentEntry:
        labels = (
            [rng.choice(functions)]
            + [rng.choice(functions + predicates) for _ in range(body - 1)]
            + [rng.choice(functions)]
        )
        edges = _chain(rng, labels, functions, predicates, 1, None)
        edges.append((len(labels) - 1, 1))
        return _numbered("w", labels, edges, name=f"component{index}")

    graphs = [other_graph(index) for index in range(2, components + 1)]
    graphs.insert(rng.randrange(components), main_graph())
    return _document(
        f"random-{seed}",
        {
            "processing": [INI, FIN] + processing,
            "setting": binary[:1],
            "getting": binary[1:],
            "predicate": predicates,
        },
        {"main": main, "input": inputs, "output": [0, 1]},
        tables,
        graphs,
    )


def _numbered(
    prefix: str, labels: List[str], edges: List[tuple], name: str, main: bool = False
) -> ComponentEntry:
    ids = [f"{prefix}{i}" for i in range(len(labels))]
    return _component(
        ids[0],
        dict(zip(ids, labels)),
        [(ids[e[0]], ids[e[1]]) + tuple(e[2:]) for e in edges],
        name=name,
        main=main,
    )


FIXTURES: Dict[str, Callable[..., ModelDocument]] = {
    "countdown": countdown,
    "handoff": handoff,
    "countdown-unrolled": f1_unrolled,
    "countdown-prime": f1_prime,
}


def load_document(
    document: ModelDocument,
    level: ValidationLevel = ValidationLevel.STRICT,
    bottom_policy: Optional[BottomPolicy] = None,
) -> ProtoAlgorithm:
    """Parse and validate an in-memory document."""
    return validate_model(parse_document(document), level, bottom_policy)


def load_fixture(
    name: str,
    *args: int,
    level: ValidationLevel = ValidationLevel.STRICT,
    bottom_policy: Optional[BottomPolicy] = None,
) -> ProtoAlgorithm:
    """
    Build, parse and validate a registered fixture.

    Args:
        name: Key of ``FIXTURES``
        *args: Parameters passed to the fixture builder
        level: Validation level
        bottom_policy: Optional override of the fixture's bottom policy
    """
    try:
        builder = FIXTURES[name]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(sorted(FIXTURES))}") from None
    return load_document(builder(*args), level, bottom_policy)
