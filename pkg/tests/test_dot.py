"""Tests for GraphViz export."""

from protoalg.dot import export_dot
from protoalg.fixtures import load_fixture
from protoalg.model import BottomPolicy
from protoalg.semantics import Variant, build_state_graph


class TestComponentExport:
    """Test export of component graphs."""

    def test_countdown(self):
        """Test clusters, vertex labels and edge labels."""
        dot = export_dot(load_fixture("countdown"))
        assert dot.startswith('digraph "countdown-3" {')
        assert 'subgraph "cluster_1" {' in dot
        assert 'label="main (main)";' in dot
        assert '"1:r" [label="r:ini" shape=box peripheries=2];' in dot
        assert '"1:v1" -> "1:v2" [label="0"];' in dot
        assert '"1:v2" -> "1:v1";' in dot
        assert dot.count("->") == 4

    def test_one_cluster_per_component(self):
        """Test that every component gets its own cluster."""
        dot = export_dot(load_fixture("handoff"))
        assert 'subgraph "cluster_2" {' in dot
        assert 'label="worker1";' in dot
        assert '"2:w3" -> "2:w1";' in dot

    def test_quoting(self):
        """Test that quotes in names are escaped."""
        model = load_fixture("countdown")
        renamed = type(model)(
            alphabet=model.alphabet,
            components=model.components,
            interpretation=model.interpretation,
            name='say "hi"',
        )
        assert export_dot(renamed).startswith('digraph "say \\"hi\\"" {')


class TestStateGraphExport:
    """Test export of state graphs."""

    def test_countdown_run(self):
        """Test node shapes and edge count for one input."""
        graph = build_state_graph(load_fixture("countdown"), Variant.ALGORITHMIC, [2])
        dot = export_dot(graph)
        assert dot.startswith('digraph "countdown-3 algorithmic" {')
        assert dot.count("shape=box") == 1
        assert dot.count("shape=doublecircle") == 1
        assert dot.count(" -> ") == 8
        assert "STUCK" not in dot

    def test_stuck_states_are_flagged(self):
        """Test that stuck states are colored and labeled."""
        model = load_fixture("handoff", bottom_policy=BottomPolicy.STRICT)
        dot = export_dot(build_state_graph(model, Variant.ALGORITHMIC, [1]))
        assert dot.count('xlabel="STUCK"') == 3
