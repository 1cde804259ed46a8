"""Concurrent proto-algorithm workbench.

This package validates proto-algorithm models, executes them under the
algorithmic and computational semantics, decides isomorphism, simulation
and equivalence, and compiles concurrent models into sequential ones.
"""

from .equivalence import check_equivalence, check_isomorphism, check_simulation
from .model import ProtoAlgorithm, validate_model
from .modelio import load_model, serialize_model
from .semantics import Variant, build_state_graph, computed_function
from .transform import sequentialize

__all__ = [
    "ProtoAlgorithm",
    "Variant",
    "build_state_graph",
    "check_equivalence",
    "check_isomorphism",
    "check_simulation",
    "computed_function",
    "load_model",
    "sequentialize",
    "serialize_model",
    "validate_model",
]
