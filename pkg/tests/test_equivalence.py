"""Tests for simulation, equivalence and isomorphism checks."""

import dataclasses

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from protoalg.equivalence import (
    SimulationRelation,
    check_equivalence,
    check_isomorphism,
    check_isomorphism_report,
    check_simulation,
    extract_translations,
    greatest_simulation,
    lift_run,
    verify_isomorphism,
    verify_simulation,
    verify_simulation_consequences,
)
from protoalg.errors import NotASimulation, ResourceBoundExceeded
from protoalg.fixtures import (
    countdown,
    double_predicate_document,
    handoff,
    load_document,
    load_fixture,
    random_document,
    rename_document,
    unroll_document,
)
from protoalg.model import State, StateKind
from protoalg.semantics import Terminal, Variant, build_state_graph, enumerate_runs

ALGORITHMIC = Variant.ALGORITHMIC
COMPUTATIONAL = Variant.COMPUTATIONAL


def naive_greatest_simulation(left, right):
    """Brute-force greatest kind-respecting relation closed under transfer."""
    pairs = {
        (s, t) for s in left.states for t in right.states if s.kind is t.kind
    }
    changed = True
    while changed:
        changed = False
        for s, t in sorted(pairs, key=lambda p: (p[0].sort_key(), p[1].sort_key())):
            ok = all(
                any((s2, t2) in pairs for t2 in right.successors[t])
                for s2 in left.successors[s]
            )
            if not ok:
                pairs.discard((s, t))
                changed = True
    return pairs


def small_model(seed, components):
    if components == 1:
        return load_document(random_document(seed))
    return load_document(random_document(seed, components=2, domain_size=2, body=2))


class TestSimulation:
    """Test simulation checks on the reference models."""

    def test_self_simulation(self):
        """Test that every model simulates itself."""
        model = load_fixture("countdown")
        report = check_simulation(model, model)
        assert report.verdict
        assert report.gamma_i == {0: 0, 1: 1, 2: 2, 3: 3}

    def test_unrolled_loop_simulates(self):
        """Test that unrolling a loop keeps algorithmic simulation."""
        report = check_simulation(load_fixture("countdown"), load_fixture("countdown-unrolled"))
        assert report.verdict
        assert verify_simulation(report.relation) == []

    def test_extra_test_breaks_algorithmic_simulation(self):
        """Test that an extra predicate step is visible algorithmically."""
        report = check_simulation(load_fixture("countdown"), load_fixture("countdown-prime"))
        assert not report.verdict
        assert {issue.code for issue in report.failures} == {"InitialNotCovered"}

    def test_extra_test_is_concealed_computationally(self):
        """Test that the same extra step is concealed computationally."""
        report = check_simulation(
            load_fixture("countdown"), load_fixture("countdown-prime"), COMPUTATIONAL
        )
        assert report.verdict

    def test_greatest_simulation(self):
        """Test that the greatest simulation is returned, or None when coverage fails."""
        model = load_fixture("countdown")
        relation = greatest_simulation(model, load_fixture("countdown-unrolled"))
        assert relation is not None
        assert (State.initial(2), State.initial(2)) in relation
        assert greatest_simulation(model, load_fixture("countdown-prime")) is None

    def test_fixed_point_matches_brute_force(self):
        """Test the computed relation against a naive fixed-point iteration."""
        left = load_fixture("countdown")
        right = load_fixture("countdown-prime")
        report = check_simulation(left, right)
        oracle = naive_greatest_simulation(report.relation.left, report.relation.right)
        assert set(report.relation.pairs) == oracle


class TestVerifySimulation:
    """Test the independent checker for candidate relations."""

    def _relation(self):
        model = load_fixture("countdown")
        return check_simulation(model, model).relation

    def test_accepts_valid_relation(self):
        """Test that a computed relation passes the checker."""
        assert verify_simulation(self._relation()) == []

    def test_missing_initial_pair(self):
        """Test that dropping an initial pair breaks coverage."""
        relation = self._relation().without((State.initial(2), State.initial(2)))
        codes = [issue.code for issue in verify_simulation(relation)]
        assert codes == ["InitialNotCovered"]

    def test_transfer_violation(self):
        """Test that dropping an inner pair breaks transfer at its predecessor."""
        relation = self._relation()
        pair = next(
            (s, t) for s, t in relation.sorted_pairs() if s.kind is StateKind.INTERNAL
        )
        codes = {issue.code for issue in verify_simulation(relation.without(pair), False)}
        assert codes == {"TransferViolated"}

    def test_kind_mismatch(self):
        """Test that relating an initial state to a final state is rejected."""
        relation = self._relation()
        bad = SimulationRelation(
            ALGORITHMIC,
            relation.pairs | {(State.initial(1), State.final(0))},
            relation.left,
            relation.right,
        )
        codes = {issue.code for issue in verify_simulation(bad)}
        assert "KindMismatch" in codes

    def test_unknown_state(self):
        """Test that pairs outside the graphs are reported."""
        relation = self._relation()
        bad = SimulationRelation(
            ALGORITHMIC,
            relation.pairs | {(State.initial(7), State.initial(7))},
            relation.left,
            relation.right,
        )
        assert "UnknownState" in {issue.code for issue in verify_simulation(bad)}


class TestEquivalence:
    """Test algorithmic and computational equivalence."""

    def test_unrolled_is_algorithmically_equivalent(self):
        """Test that loop unrolling preserves algorithmic equivalence."""
        report = check_equivalence(load_fixture("countdown"), load_fixture("countdown-unrolled"))
        assert report.verdict
        assert report.relation is not None

    def test_prime_is_only_computationally_equivalent(self):
        """Test that the repeated test separates the two variants."""
        left = load_fixture("countdown")
        right = load_fixture("countdown-prime")
        assert not check_equivalence(left, right, ALGORITHMIC).verdict
        assert check_equivalence(left, right, COMPUTATIONAL).verdict

    def test_different_models_are_not_equivalent(self):
        """Test that countdown and handoff are told apart."""
        left = load_fixture("countdown")
        right = load_fixture("handoff")
        assert not check_equivalence(left, right, ALGORITHMIC).verdict
        assert not check_equivalence(left, right, COMPUTATIONAL).verdict

    def test_translations_through_renaming(self):
        """Test that input and output translations are read off the relation."""
        left = load_fixture("countdown")
        right = load_document(rename_document(countdown()))
        report = check_equivalence(left, right)
        assert report.verdict
        assert report.gamma_i == {0: "i0", 1: "i1", 2: "i2", 3: "i3"}
        assert report.gamma_o == {"o0": 0}
        assert extract_translations(report.relation) == (report.gamma_i, report.gamma_o)

    def test_state_cap(self):
        """Test that the cap bounds the state-graph construction."""
        model = load_fixture("countdown")
        with pytest.raises(ResourceBoundExceeded):
            check_equivalence(model, model, cap=3)


class TestIsomorphism:
    """Test the isomorphism search and its checker."""

    def test_renamed_copy_is_isomorphic(self):
        """Test that a renamed copy is found isomorphic."""
        left = load_fixture("countdown")
        right = load_document(rename_document(countdown()))
        witness = check_isomorphism(left, right)
        assert witness is not None
        assert not witness.swaps_edge_labels
        assert witness.symbols["dec"] == "dec_r"
        assert witness.data == {0: "m0", 1: "m1", 2: "m2", 3: "m3"}
        assert verify_isomorphism(left, right, witness) == []

    def test_swapped_edge_labels(self):
        """Test an isomorphism that exchanges the predicate edge labels."""
        left = load_fixture("countdown")
        right = load_document(rename_document(countdown(), swap_edge_labels=True))
        witness = check_isomorphism(left, right)
        assert witness is not None
        assert witness.swaps_edge_labels
        assert verify_isomorphism(left, right, witness) == []

    def test_component_permutation(self):
        """Test that components are matched across a reordering."""
        left = load_fixture("handoff")
        right = load_document(rename_document(handoff()))
        witness = check_isomorphism(left, right)
        assert witness is not None
        assert dict(witness.components) == {1: 2, 2: 1}
        assert verify_isomorphism(left, right, witness) == []

    def test_unrolled_is_not_isomorphic(self):
        """Test that equivalent models of different size are not isomorphic."""
        unrolled = load_fixture("countdown-unrolled")
        assert check_isomorphism(load_fixture("countdown"), unrolled) is None

    def test_different_tables_are_not_isomorphic(self):
        """Test that equal graphs over incompatible tables are rejected."""
        document = countdown()
        document["interpretation"]["tables"]["dec"] = {
            "0": 0, "1": 1, "2": 2, "3": 3, "_bot": "_bot"
        }
        stalled = load_document(document)
        assert check_isomorphism(load_fixture("countdown"), stalled) is None

    def test_tampered_witness_is_rejected(self):
        """Test that the checker catches a wrong data bijection."""
        left = load_fixture("countdown")
        right = load_document(rename_document(countdown()))
        witness = check_isomorphism(left, right)
        data = dict(witness.data)
        data[0], data[1] = data[1], data[0]
        issues = verify_isomorphism(left, right, dataclasses.replace(witness, data=data))
        assert {issue.code for issue in issues} == {"TableNotPreserved"}

    def test_moved_reserved_symbol_is_rejected(self):
        """Test that ini and fin must map to themselves."""
        model = load_fixture("countdown")
        witness = check_isomorphism(model, model)
        symbols = dict(witness.symbols)
        symbols["ini"], symbols["fin"] = "fin", "ini"
        issues = verify_isomorphism(model, model, dataclasses.replace(witness, symbols=symbols))
        assert "ReservedSymbolMoved" in {issue.code for issue in issues}

    def test_report(self):
        """Test the report form of an isomorphism check."""
        left = load_fixture("countdown")
        right = load_document(rename_document(countdown()))
        report = check_isomorphism_report(left, right)
        assert report.kind == "isomorphism"
        assert report.verdict
        assert report.gamma_i == {0: "i0", 1: "i1", 2: "i2", 3: "i3"}
        assert report.gamma_o == {"o0": 0}
        assert report.isomorphism.as_dict()["components"] == {"1": 1}

    def test_search_budget(self):
        """Test that the search budget is enforced."""
        left = load_fixture("handoff")
        right = load_document(rename_document(handoff()))
        with pytest.raises(ResourceBoundExceeded):
            check_isomorphism(left, right, budget=1)


class TestConsequences:
    """Test run lifting and the consequences of a simulation."""

    def test_lift_run(self):
        """Test that a run lifts to an equally long related run."""
        report = check_simulation(load_fixture("countdown"), load_fixture("countdown-unrolled"))
        (run,) = enumerate_runs(load_fixture("countdown"), 3)
        lifted = lift_run(report.relation, run, report.gamma_i)
        assert len(lifted) == len(run)
        assert lifted.terminal is Terminal.FINAL
        for s, t in zip(run.states, lifted.states):
            assert (s, t) in report.relation

    def test_lift_run_without_related_start(self):
        """Test that lifting fails when the initial pair is missing."""
        model = load_fixture("countdown")
        relation = check_simulation(model, model).relation
        relation = relation.without((State.initial(2), State.initial(2)))
        (run,) = enumerate_runs(model, 2)
        with pytest.raises(NotASimulation):
            lift_run(relation, run, {2: 2})

    def test_algorithmic_consequences(self):
        """Test definedness, outputs and run lengths under an algorithmic simulation."""
        left = load_fixture("countdown")
        right = load_fixture("countdown-unrolled")
        report = check_simulation(left, right)
        consequences = verify_simulation_consequences(left, right, report.relation)
        assert consequences.holds
        assert consequences.run_lengths is True
        assert consequences.exact_gamma_o
        assert consequences.violations == ()

    def test_computational_consequences(self):
        """Test that run lengths are not claimed computationally."""
        left = load_fixture("countdown")
        right = load_fixture("countdown-prime")
        report = check_simulation(left, right, COMPUTATIONAL)
        consequences = verify_simulation_consequences(left, right, report.relation)
        assert consequences.holds
        assert consequences.run_lengths is None

    def test_inexact_output_translation(self):
        """Test that a wrong output map is flagged without failing the relational check."""
        model = load_fixture("countdown")
        relation = check_simulation(model, model).relation
        consequences = verify_simulation_consequences(model, model, relation, gamma_o={0: 99})
        assert consequences.holds
        assert not consequences.exact_gamma_o


class TestProperties:
    """Property checks relating isomorphism, equivalence and simulation."""

    @settings(deadline=None, max_examples=10)
    @given(seed=st.integers(min_value=0, max_value=10_000), components=st.sampled_from([1, 2]))
    def test_isomorphism_implies_equivalences(self, seed, components):
        """Test that a renamed copy is isomorphic and equivalent in both variants."""
        if components == 1:
            document = random_document(seed)
        else:
            document = random_document(seed, components=2, domain_size=2, body=2)
        left = load_document(document)
        right = load_document(rename_document(document, swap_edge_labels=seed % 2 == 1))
        witness = check_isomorphism(left, right)
        assert witness is not None
        assert verify_isomorphism(left, right, witness) == []
        assert check_equivalence(left, right, ALGORITHMIC).verdict
        assert check_equivalence(left, right, COMPUTATIONAL).verdict

    @settings(deadline=None, max_examples=10)
    @given(seed=st.integers(min_value=0, max_value=10_000))
    def test_unrolling_preserves_algorithmic_equivalence(self, seed):
        """Test that splitting a join vertex keeps the models algorithmically equivalent."""
        document = random_document(seed, body=4)
        try:
            unrolled = unroll_document(document)
        except ValueError:
            assume(False)
        left, right = load_document(document), load_document(unrolled)
        assert check_equivalence(left, right, ALGORITHMIC).verdict

    @settings(deadline=None, max_examples=10)
    @given(seed=st.integers(min_value=0, max_value=10_000))
    def test_extra_predicate_preserves_computational_equivalence(self, seed):
        """Test that an always-true test in front of fin is concealed computationally."""
        document = random_document(seed)
        try:
            doubled = double_predicate_document(document)
        except ValueError:
            assume(False)
        left, right = load_document(document), load_document(doubled)
        assert check_equivalence(left, right, COMPUTATIONAL).verdict

    @settings(deadline=None, max_examples=10)
    @given(seed=st.integers(min_value=0, max_value=10_000), components=st.sampled_from([1, 2]))
    def test_simulation_is_reflexive(self, seed, components):
        """Test that every model simulates itself under both variants."""
        model = small_model(seed, components)
        assert check_simulation(model, model, ALGORITHMIC).verdict
        assert check_simulation(model, model, COMPUTATIONAL).verdict

    @settings(deadline=None, max_examples=10)
    @given(
        seed=st.integers(min_value=0, max_value=10_000),
        components=st.sampled_from([1, 2]),
        variant=st.sampled_from([ALGORITHMIC, COMPUTATIONAL]),
    )
    def test_union_of_simulations_is_a_simulation(self, seed, components, variant):
        """Test that joining the greatest simulation with the identity stays a simulation."""
        model = small_model(seed, components)
        greatest = greatest_simulation(model, model, variant)
        assert greatest is not None
        identity = SimulationRelation(
            variant,
            frozenset((s, s) for s in greatest.left.states),
            greatest.left,
            greatest.right,
        )
        assert verify_simulation(identity) == []
        assert verify_simulation(greatest) == []

        joined = greatest.union(identity)
        assert joined.pairs == greatest.pairs | identity.pairs
        assert verify_simulation(joined) == []
        assert verify_simulation(identity.union(greatest)) == []

    @settings(deadline=None, max_examples=10)
    @given(
        first=st.integers(min_value=0, max_value=10_000),
        second=st.integers(min_value=0, max_value=10_000),
    )
    def test_equivalence_is_symmetric(self, first, second):
        """Test that swapping the arguments does not change the verdict."""
        left, right = small_model(first, 1), small_model(second, 1)
        for variant in (ALGORITHMIC, COMPUTATIONAL):
            forward = check_equivalence(left, right, variant).verdict
            backward = check_equivalence(right, left, variant).verdict
            assert forward == backward

    @settings(deadline=None, max_examples=10)
    @given(
        first=st.integers(min_value=0, max_value=10_000),
        second=st.integers(min_value=0, max_value=10_000),
        variant=st.sampled_from([ALGORITHMIC, COMPUTATIONAL]),
    )
    def test_fixed_point_matches_brute_force(self, first, second, variant):
        """Test the refinement against naive iteration on arbitrary model pairs."""
        left, right = small_model(first, 1), small_model(second, 1)
        g_left = build_state_graph(left, variant)
        g_right = build_state_graph(right, variant)
        report = check_simulation(left, right, variant)
        assert set(report.relation.pairs) == naive_greatest_simulation(g_left, g_right)

    @settings(deadline=None, max_examples=10)
    @given(seed=st.integers(min_value=0, max_value=10_000))
    def test_simulation_consequences_hold(self, seed):
        """Test that a positive simulation verdict implies its consequences."""
        document = random_document(seed)
        left = load_document(document)
        right = load_document(rename_document(document))
        report = check_simulation(left, right, ALGORITHMIC)
        assert report.verdict
        consequences = verify_simulation_consequences(left, right, report.relation)
        assert consequences.holds
