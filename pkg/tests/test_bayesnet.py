import pytest
from hypothesis import given, settings, strategies as st

from veristrat.bayesnet import (
    ACTIVITY,
    PARAMETER,
    BayesNetwork,
    BayesNode,
    ExplicitTable,
    ImpossibleEvidenceError,
    MalformedAssignmentError,
    NetworkError,
    NoisyOr,
    cpt_prob,
    network_from_dict,
    network_to_dict,
    posterior,
)
from veristrat.netgen import exemplar_network, random_network

from oracles import joint_posterior


class TestCptProb:
    def test_noisy_or_formula(self):
        node = BayesNode("x", ACTIVITY, ("p1", "p2"), NoisyOr(0.1, (0.6, 0.5)))
        assert cpt_prob(node, {"p1": True, "p2": True}) == pytest.approx(1 - 0.9 * 0.4 * 0.5)
        assert cpt_prob(node, {"p1": True, "p2": False}) == pytest.approx(1 - 0.9 * 0.4)
        assert cpt_prob(node, {"p1": False, "p2": False}) == pytest.approx(0.1)

    def test_single_parent(self):
        node = BayesNode("x", ACTIVITY, ("p",), NoisyOr(0.05, (0.9,)))
        assert cpt_prob(node, {"p": True}) == pytest.approx(1 - 0.95 * 0.1)

    def test_explicit_rows(self):
        node = BayesNode("x", ACTIVITY, ("p",), ExplicitTable({"1": 0.9, "0": 0.2}))
        assert cpt_prob(node, {"p": True}) == 0.9
        assert cpt_prob(node, {"p": False}) == 0.2

    def test_missing_parent_rejected(self):
        node = BayesNode("x", ACTIVITY, ("p1", "p2"), NoisyOr(0.1, (0.6, 0.5)))
        with pytest.raises(MalformedAssignmentError):
            cpt_prob(node, {"p1": True})


class TestPosterior:
    def test_chain_matches_enumeration(self, chain_network):
        # frozen from the full-joint oracle
        assert posterior(chain_network, {"A2": True}, "theta") == pytest.approx(
            0.8765008576329331, abs=1e-12
        )
        assert posterior(chain_network, {"A1": False, "A2": True}, "theta") == pytest.approx(
            0.22580645161290314, abs=1e-12
        )

    def test_no_evidence_is_prior(self, chain_network):
        assert posterior(chain_network, {}, "theta") == pytest.approx(0.7, abs=1e-12)

    def test_conditioning_on_query_is_exact(self, chain_network):
        assert posterior(chain_network, {"theta": True}, "theta") == 1.0
        assert posterior(chain_network, {"theta": False}, "theta") == 0.0

    def test_impossible_evidence_raises(self):
        net = BayesNetwork(
            [
                BayesNode("theta", PARAMETER, (), ExplicitTable({"": 0.7})),
                BayesNode("A", ACTIVITY, ("theta",), ExplicitTable({"1": 1.0, "0": 1.0})),
            ],
            targets=("theta",),
            activity_scope=("A",),
        )
        with pytest.raises(ImpossibleEvidenceError):
            posterior(net, {"A": False}, "theta")

    def test_unknown_nodes_rejected(self, chain_network):
        with pytest.raises(NetworkError):
            posterior(chain_network, {"nope": True}, "theta")
        with pytest.raises(NetworkError):
            posterior(chain_network, {}, "nope")

    @pytest.mark.parametrize("seed", range(10))
    def test_random_networks_match_enumeration(self, seed):
        net = random_network(n_parameters=2 + seed % 3, n_activities=3 + seed % 4, seed=seed)
        import random

        rng = random.Random(seed)
        scope = list(net.activity_scope)
        for _ in range(4):
            k = rng.randint(0, min(3, len(scope)))
            evidence = {a: rng.random() < 0.5 for a in rng.sample(scope, k)}
            got = posterior(net, evidence, net.targets[0])
            want = joint_posterior(net, evidence, net.targets[0])
            assert got == pytest.approx(want, abs=1e-10)

    @given(st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=30, deadline=None)
    def test_posterior_is_a_probability(self, seed):
        import random

        rng = random.Random(seed)
        net = exemplar_network()
        evidence = {a: rng.random() < 0.5 for a in net.activity_scope if rng.random() < 0.6}
        p = posterior(net, evidence, "theta1")
        assert 0.0 <= p <= 1.0
        assert posterior(net, evidence, "theta1") == p  # memoised and stable


class TestValidation:
    def test_cycle_rejected(self):
        with pytest.raises(NetworkError):
            BayesNetwork(
                [
                    BayesNode("a", PARAMETER, ("b",), NoisyOr(0.1, (0.5,))),
                    BayesNode("b", PARAMETER, ("a",), NoisyOr(0.1, (0.5,))),
                ],
                targets=("a",),
                activity_scope=(),
            )

    def test_unknown_parent_rejected(self):
        with pytest.raises(NetworkError):
            BayesNetwork(
                [BayesNode("a", PARAMETER, ("ghost",), NoisyOr(0.1, (0.5,)))],
                targets=("a",),
                activity_scope=(),
            )

    def test_explicit_table_must_cover_all_rows(self):
        with pytest.raises(NetworkError):
            BayesNetwork(
                [
                    BayesNode("p", PARAMETER, (), ExplicitTable({"": 0.5})),
                    BayesNode("a", ACTIVITY, ("p",), ExplicitTable({"1": 0.9})),
                ],
                targets=("p",),
                activity_scope=("a",),
            )

    def test_scope_must_be_activities(self):
        with pytest.raises(NetworkError):
            BayesNetwork(
                [BayesNode("p", PARAMETER, (), ExplicitTable({"": 0.5}))],
                targets=("p",),
                activity_scope=("p",),
            )

    def test_weight_count_must_match_parents(self):
        with pytest.raises(NetworkError):
            BayesNode_ok = BayesNode("p", PARAMETER, (), NoisyOr(0.5, ()))
            BayesNetwork(
                [BayesNode_ok, BayesNode("a", ACTIVITY, ("p",), NoisyOr(0.1, ()))],
                targets=("p",),
                activity_scope=("a",),
            )


class TestSerialization:
    def test_round_trip(self):
        net = exemplar_network()
        clone = network_from_dict(network_to_dict(net))
        assert network_to_dict(clone) == network_to_dict(net)
        assert posterior(clone, {"A2": False}, "theta1") == posterior(net, {"A2": False}, "theta1")

    def test_scope_restriction_preserves_the_joint(self):
        from veristrat.netgen import satellite_network

        net = satellite_network()
        small = net.restrict_scope(net.scopes["small"])
        ev = {"A22": True, "A23": False}
        assert posterior(small, ev, "theta3") == posterior(net, ev, "theta3")
