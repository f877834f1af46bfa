from __future__ import annotations

import sys
from fractions import Fraction
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

import pytest

from veristrat.bayesnet import (
    ACTIVITY,
    PARAMETER,
    BayesNetwork,
    BayesNode,
    ExplicitTable,
    NoisyOr,
)
from veristrat.money import from_display
from veristrat.netgen import exemplar_network, random_network
from veristrat.scenario import CostModel, Scenario


def make_cost_model(activities, cost=350, rework=800, horizon=5, revenue=20000, target="theta1"):
    return CostModel(
        activity_costs={a: from_display(cost) for a in activities},
        rework_bases={a: from_display(rework) for a in activities},
        penalties=tuple(Fraction(x) for x in ["1", "1.11", "1.22", "1.36", "1.5"][:horizon]),
        revenue={target: from_display(revenue)},
    )


@pytest.fixture(scope="session")
def chain_network():
    return BayesNetwork(
        [
            BayesNode("theta", PARAMETER, (), ExplicitTable({"": 0.7})),
            BayesNode("A1", ACTIVITY, ("theta",), ExplicitTable({"1": 0.9, "0": 0.2})),
            BayesNode("A2", ACTIVITY, ("A1",), ExplicitTable({"1": 0.8, "0": 0.1})),
        ],
        targets=("theta",),
        activity_scope=("A1", "A2"),
    )


@pytest.fixture(scope="session")
def exemplar_scenario():
    net = exemplar_network()
    costs = CostModel(
        activity_costs={a: from_display(c) for a, c in
                        [("A1", 350), ("A2", 800), ("A3", 250), ("A4", 550)]},
        rework_bases={a: from_display(c) for a, c in
                      [("A1", 1490), ("A2", 740), ("A3", 1860), ("A4", 6200)]},
        penalties=tuple(Fraction(x) for x in ["1", "1.11", "1.22", "1.36", "1.5"]),
        revenue={"theta1": from_display(20000)},
    )
    return Scenario(net, costs, (0.2,) * 5, horizon=5, deployment_threshold=0.95, rule_name="Low")


def tiny_scenario(seed: int, n_activities: int = 3, horizon: int = 2, rule=None):
    """Small random scenario whose tradespace can be enumerated exhaustively."""
    import random

    rng = random.Random(f"tiny:{seed}")
    net = random_network(n_parameters=rng.randint(2, 3), n_activities=n_activities, seed=seed)
    target = net.targets[0]
    costs = CostModel(
        activity_costs={a: from_display(rng.randrange(100, 1000)) for a in net.activity_scope},
        rework_bases={a: from_display(rng.randrange(200, 5000)) for a in net.activity_scope},
        penalties=tuple(Fraction(1) + Fraction(i, 10) for i in range(horizon)),
        revenue={target: from_display(rng.randrange(5000, 30000))},
    )
    if rule is None:
        base = rng.uniform(0.1, 0.5)
        rule = tuple(min(0.95, base + i * rng.uniform(0.0, 0.2)) for i in range(horizon))
    return Scenario(net, costs, rule, horizon=horizon,
                    deployment_threshold=rng.uniform(0.85, 0.97), rule_name="custom")
