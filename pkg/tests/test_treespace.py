"""Tree structure rules and exact pricing of verification strategies."""

import math
import random

import pytest

from veristrat.money import from_display
from veristrat.scenario import VerificationState, apply_result
from veristrat.treespace import (
    DEPLOYED,
    HORIZON,
    NA_STOP,
    ForesightTree,
    RawTree,
    TreeError,
    TreeEvaluator,
    evaluate_rvt,
    expected_value,
    fvt_to_dict,
    fvt_to_dot,
    leaf_paths,
    revenue_at,
    tree_levels,
    trivial_fvt,
    validate_tree,
)

from conftest import tiny_scenario
from oracles import (
    all_canonical_labelings,
    enumerate_outcomes,
    expected_value_of_labels,
    rollout_mean,
)


class TestStructure:
    def test_tree_levels(self):
        assert tree_levels(3) == [range(0, 1), range(1, 3), range(3, 7)]

    def test_leaf_paths_of_depth_three(self):
        paths = list(leaf_paths(7))
        assert paths == [[0, 1, 3], [0, 1, 4], [0, 2, 5], [0, 2, 6]]

    def test_depth_from_label_count(self, exemplar_scenario):
        origin = exemplar_scenario.initial_state()
        assert RawTree(origin, [None] * 31).depth == 5
        assert RawTree(origin, [None] * 7).depth == 3
        assert RawTree(origin, []).depth == 0

    def test_validate_accepts_legal_tree(self, exemplar_scenario):
        origin = exemplar_scenario.initial_state()
        tree = RawTree(origin, ["A1", "A2", "A3", None, "A4", "A4", None])
        validate_tree(tree)

    def test_validate_rejects_wrong_size(self, exemplar_scenario):
        origin = exemplar_scenario.initial_state()
        with pytest.raises(TreeError, match="labels"):
            validate_tree(RawTree(origin, ["A1", "A2"]))

    def test_validate_rejects_foreign_label(self, exemplar_scenario):
        origin = exemplar_scenario.initial_state()
        with pytest.raises(TreeError, match="A9"):
            validate_tree(RawTree(origin, ["A9", None, None]))

    def test_validate_rejects_verified_label(self, exemplar_scenario):
        origin = apply_result(exemplar_scenario.initial_state(), "A1", True)
        with pytest.raises(TreeError):
            validate_tree(RawTree(origin, ["A1", None, None]))

    def test_validate_rejects_repeat_on_path(self, exemplar_scenario):
        origin = exemplar_scenario.initial_state()
        with pytest.raises(TreeError, match="repeats"):
            validate_tree(RawTree(origin, ["A1", "A2", "A1"]))

    def test_same_activity_on_sibling_branches_is_legal(self, exemplar_scenario):
        origin = exemplar_scenario.initial_state()
        validate_tree(RawTree(origin, ["A1", "A2", "A2"]))

    def test_equality_keyed_by_origin_and_labels(self, exemplar_scenario):
        origin = exemplar_scenario.initial_state()
        a = RawTree(origin, ["A1", None, None])
        b = RawTree(origin, ["A1", None, None])
        c = RawTree(origin, ["A2", None, None])
        assert a == b and hash(a) == hash(b)
        assert a != c


class TestPricing:
    def test_depth_must_span_remaining_horizon(self, exemplar_scenario):
        origin = exemplar_scenario.initial_state()
        with pytest.raises(TreeError, match="depth"):
            evaluate_rvt(RawTree(origin, ["A1", None, None]), exemplar_scenario)

    def test_all_na_tree_is_worth_zero(self, exemplar_scenario):
        fvt = trivial_fvt(exemplar_scenario.initial_state(), exemplar_scenario)
        assert fvt.expected_value == 0.0
        assert len(fvt.paths) == 1
        assert fvt.paths[0].stop_reason == NA_STOP

    def test_path_probabilities_sum_to_one(self, exemplar_scenario):
        origin = exemplar_scenario.initial_state()
        labels = ["A2", "A1", "A1", "A3", "A4", "A3", "A4"] + [None] * 24
        fvt = evaluate_rvt(RawTree(origin, labels), exemplar_scenario)
        assert math.fsum(p.probability for p in fvt.paths) == pytest.approx(1.0, abs=1e-12)

    def test_exact_match_with_outcome_enumeration(self):
        rng = random.Random("pricing")
        for seed in range(12):
            scenario = tiny_scenario(seed, n_activities=3, horizon=3)
            origin = scenario.initial_state()
            universe = origin.unverified()
            for _ in range(8):
                labels = tuple(rng.choice(list(universe) + [None]) for _ in range(7))
                tree = RawTree(origin, labels)
                try:
                    validate_tree(tree)
                except TreeError:
                    continue
                fvt = evaluate_rvt(tree, scenario)
                oracle = expected_value_of_labels(labels, origin, scenario)
                assert fvt.expected_value == oracle

    def test_exact_match_from_partial_origin(self):
        scenario = tiny_scenario(3, n_activities=3, horizon=3)
        origin = scenario.initial_state()
        first = origin.scope[0]
        mid = apply_result(origin, first, True)
        rest = [a for a in mid.unverified()]
        labels = (rest[0], rest[1], None)
        fvt = evaluate_rvt(RawTree(mid, labels), scenario)
        assert fvt.expected_value == expected_value_of_labels(labels, mid, scenario)

    def test_evaluator_value_equals_full_evaluation(self):
        rng = random.Random("walker")
        for seed in range(6):
            scenario = tiny_scenario(seed, n_activities=4, horizon=3)
            origin = scenario.initial_state()
            ev = TreeEvaluator(scenario)
            universe = list(origin.unverified()) + [None]
            for _ in range(10):
                labels = tuple(rng.choice(universe) for _ in range(7))
                tree = RawTree(origin, labels)
                try:
                    validate_tree(tree)
                except TreeError:
                    continue
                assert ev.value(tree) == evaluate_rvt(tree, scenario).expected_value
                assert ev.value(tree) == ev.value(RawTree(origin, labels))

    def test_monte_carlo_agrees_within_three_se(self, exemplar_scenario):
        origin = exemplar_scenario.initial_state()
        labels = ("A2", "A1", "A3", "A4", None, "A1", None) + (None,) * 24
        tree = RawTree(origin, labels)
        fvt = evaluate_rvt(tree, exemplar_scenario)
        mean, se = rollout_mean(labels, origin, exemplar_scenario,
                                100_000, random.Random("mc-check"))
        assert abs(fvt.expected_value - mean) <= 3 * se

    def test_revenue_only_above_strict_threshold(self, exemplar_scenario):
        assert revenue_at(exemplar_scenario, 0.95) == 0
        assert revenue_at(exemplar_scenario, 0.96) == round(from_display(20000) * 0.96)
        assert revenue_at(exemplar_scenario, 0.2) == 0


class TestExemplarShape:
    """Known qualitative behaviour of the bundled four-activity model."""

    @pytest.fixture
    def fvt(self, exemplar_scenario) -> ForesightTree:
        origin = exemplar_scenario.initial_state()
        labels = [None] * 31
        labels[0] = "A2"
        labels[1] = "A1"  # after A2 passes (or is reworked)
        labels[3] = "A4"  # after A1 passes
        return evaluate_rvt(RawTree(origin, labels), exemplar_scenario)

    def test_root_failure_is_reworked_and_merged(self, fvt):
        root = fvt.root
        assert root.activity == "A2"
        fail = next(b for b in root.branches if not b.result)
        assert fail.rework
        assert fail.rework_cost == from_display(740)
        ok = next(b for b in root.branches if b.result)
        # both outcomes continue into the same follow-up activity
        assert fail.child.activity == ok.child.activity == "A1"

    def test_deployment_after_two_passes(self, fvt):
        ok = next(b for b in fvt.root.branches if b.result)
        a1_pass = next(b for b in ok.child.branches if b.result)
        assert a1_pass.child.kind == DEPLOYED
        assert a1_pass.posterior >= 0.95

    def test_na_stop_after_late_failure(self, fvt):
        ok = next(b for b in fvt.root.branches if b.result)
        a1_fail = next(b for b in ok.child.branches if not b.result)
        assert not a1_fail.rework  # confidence stays above the Low threshold
        assert a1_fail.child.kind == NA_STOP

    def test_path_accounting(self, fvt, exemplar_scenario):
        deploy_paths = [p for p in fvt.paths if p.stop_reason == DEPLOYED]
        assert deploy_paths
        for p in deploy_paths:
            assert p.terminal_value == (
                round(from_display(20000) * exemplar_scenario.posterior(p.end_state))
                - p.activity_cost - p.rework_cost
            )
        stopped = [p for p in fvt.paths if p.stop_reason == NA_STOP]
        for p in stopped:
            assert p.terminal_value == -(p.activity_cost + p.rework_cost)

    def test_rework_failure_merges_into_true_child(self, exemplar_scenario):
        outcomes = enumerate_outcomes(
            ("A2", "A1", None) + (None,) * 28,
            exemplar_scenario.initial_state(), exemplar_scenario)
        engine = evaluate_rvt(
            RawTree(exemplar_scenario.initial_state(),
                    ("A2", "A1", None) + (None,) * 28),
            exemplar_scenario)
        assert engine.expected_value == math.fsum(p * v for p, v in outcomes)


class TestSerialisation:
    def test_dict_export_carries_display_units(self, exemplar_scenario):
        origin = exemplar_scenario.initial_state()
        labels = ["A2", "A1", None] + [None] * 28
        fvt = evaluate_rvt(RawTree(origin, labels), exemplar_scenario)
        data = fvt_to_dict(fvt)
        assert data["root"]["action"] == "A2"
        assert data["expectedValue"] == pytest.approx(fvt.expected_value / 1000)
        probs = [p["probability"] for p in data["paths"]]
        assert math.fsum(probs) == pytest.approx(1.0, abs=1e-12)

    def test_dot_export_mentions_activities(self, exemplar_scenario):
        origin = exemplar_scenario.initial_state()
        fvt = evaluate_rvt(RawTree(origin, ["A2", "A1", None] + [None] * 28),
                           exemplar_scenario)
        dot = fvt_to_dot(fvt)
        assert dot.startswith("digraph")
        assert "A2" in dot and "A1" in dot


class TestCanonicalEnumeration:
    def test_labeling_counts_are_finite_and_unique(self):
        trees = list(all_canonical_labelings(("A1", "A2"), 2))
        assert len(trees) == len(set(trees))
        # root NA, or an activity with each subtree either the other activity or NA
        assert (None, None, None) in trees
        assert ("A1", "A2", "A2") in trees
        assert ("A1", None, "A2") in trees
        assert ("A1", "A1", None) not in trees
