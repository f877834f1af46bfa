"""Campaign scenarios: cost model, rework rules, and verification state.

A scenario binds a confidence network to money: per-activity execution
costs, rework base costs with a time-indexed penalty schedule, revenue on
the single target parameter, a lower confidence threshold per time interval
(the rework trigger), and an upper threshold at which the system deploys.

The verification state is a ternary vector over the activity scope:
0 unverified, +1 verified true, -1 verified false, plus a time index equal
to the number of intervals consumed. Rework flips a failure to a success
without consuming time.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Dict, Mapping, Optional, Sequence, Tuple

from .bayesnet import BayesNetwork, Evidence, load_network, network_from_dict
from .errors import ConfigError
from .money import Money, from_display, parse_fraction
from . import money

UNVERIFIED = 0
PASSED = 1
FAILED = -1


class StateError(ValueError):
    """Invalid verification state transition."""


@dataclass(frozen=True)
class VerificationState:
    scope: Tuple[str, ...]
    results: Tuple[int, ...]
    time: int

    def __post_init__(self):
        if len(self.results) != len(self.scope):
            raise StateError("result vector length does not match activity scope")
        if any(r not in (-1, 0, 1) for r in self.results):
            raise StateError("results must be -1, 0 or +1")
        verified = sum(1 for r in self.results if r != 0)
        if self.time < verified:
            raise StateError(f"time {self.time} below verified count {verified}")

    def result_for(self, activity: str) -> int:
        try:
            return self.results[self.scope.index(activity)]
        except ValueError:
            raise StateError(f"activity {activity!r} not in scope") from None

    def unverified(self) -> Tuple[str, ...]:
        return tuple(a for a, r in zip(self.scope, self.results) if r == 0)

    def key(self) -> Tuple[Tuple[int, ...], int]:
        return (self.results, self.time)

    def to_dict(self) -> dict:
        return {"results": list(self.results), "time": self.time}


def state_from_dict(data: Mapping, scope: Sequence[str]) -> VerificationState:
    return VerificationState(tuple(scope), tuple(int(r) for r in data["results"]), int(data["time"]))


def state_to_evidence(state: VerificationState) -> Evidence:
    """Observed activity outcomes as network evidence (unverified omitted)."""
    return {a: r == PASSED for a, r in zip(state.scope, state.results) if r != UNVERIFIED}


def apply_result(state: VerificationState, activity: str, result: bool) -> VerificationState:
    """Record an executed activity's outcome; consumes one time interval."""
    i = state.scope.index(activity) if activity in state.scope else -1
    if i < 0:
        raise StateError(f"activity {activity!r} not in scope")
    if state.results[i] != UNVERIFIED:
        raise StateError(f"activity {activity!r} already verified")
    results = list(state.results)
    results[i] = PASSED if result else FAILED
    return VerificationState(state.scope, tuple(results), state.time + 1)


def apply_rework(state: VerificationState, activity: str) -> VerificationState:
    """Flip a failed activity to success; rework consumes no interval."""
    i = state.scope.index(activity) if activity in state.scope else -1
    if i < 0:
        raise StateError(f"activity {activity!r} not in scope")
    if state.results[i] != FAILED:
        raise StateError(f"activity {activity!r} has no failure to rework")
    results = list(state.results)
    results[i] = PASSED
    return VerificationState(state.scope, tuple(results), state.time)


# ---------------------------------------------------------------------------
# money model


@dataclass(frozen=True)
class CostModel:
    activity_costs: Mapping[str, Money]
    rework_bases: Mapping[str, Money]
    penalties: Tuple[Fraction, ...]
    revenue: Mapping[str, Money]

    def __post_init__(self):
        if any(c < 0 for c in self.activity_costs.values()):
            raise ConfigError("activity costs must be non-negative")
        if any(c < 0 for c in self.rework_bases.values()):
            raise ConfigError("rework base costs must be non-negative")
        if not self.penalties or any(p <= 0 for p in self.penalties):
            raise ConfigError("penalty multipliers must be positive")
        if any(b > a for a, b in zip(self.penalties[1:], self.penalties)):
            raise ConfigError("penalty multipliers must be non-decreasing")


def rework_cost(costs: CostModel, activity: str, t: int) -> Money:
    """Cost of reworking an activity whose failure surfaced in interval t."""
    if not 0 <= t < len(costs.penalties):
        raise ConfigError(f"interval {t} outside the penalty schedule")
    return money.scale_by(costs.rework_bases[activity], costs.penalties[t])


def costs_from_dict(data: Mapping, horizon: int) -> CostModel:
    try:
        acts = data["activities"]
        revenue = data["revenue"]
        penalty = data["penalty"]
    except KeyError as missing:
        raise ConfigError(f"cost file missing field {missing.args[0]!r}") from None
    if len(penalty) < horizon:
        raise ConfigError(f"penalty schedule shorter than horizon {horizon}")
    return CostModel(
        activity_costs={a: from_display(v["cost"]) for a, v in acts.items()},
        rework_bases={a: from_display(v["rework"]) for a, v in acts.items()},
        penalties=tuple(parse_fraction(p) for p in penalty[:horizon]),
        revenue={k: from_display(v) for k, v in revenue.items()},
    )


def load_costs(path, horizon: int) -> CostModel:
    with open(path, "r", encoding="utf-8") as fh:
        return costs_from_dict(json.load(fh), horizon)


def rule_thresholds(rule: str, horizon: int, rules: Mapping[str, Sequence[float]]) -> Tuple[float, ...]:
    """Lower-threshold schedule for a named rule, adapted to the horizon."""
    if rule not in rules:
        raise ConfigError(f"unknown rework rule {rule!r} (have: {', '.join(sorted(rules))})")
    values = [float(v) for v in rules[rule]]
    if any(not 0.0 <= v <= 1.0 for v in values):
        raise ConfigError(f"rule {rule!r}: thresholds must lie in [0, 1]")
    if len(values) == horizon:
        return tuple(values)
    if len(set(values)) == 1:
        return tuple(values[:1] * horizon)
    if len(values) > horizon:
        return tuple(values[:horizon])
    raise ConfigError(f"rule {rule!r} covers {len(values)} intervals, horizon is {horizon}")


def load_rules(path=None) -> Dict[str, Tuple[float, ...]]:
    if path is None:
        text = resources.files("veristrat.data").joinpath("rules.json").read_text("utf-8")
        data = json.loads(text)
    else:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    return {str(k): tuple(float(x) for x in v) for k, v in data.items()}


# ---------------------------------------------------------------------------
# scenario


class Scenario:
    """Network + money + thresholds, with cached posterior access."""

    def __init__(
        self,
        network: BayesNetwork,
        costs: CostModel,
        lower_thresholds: Sequence[float],
        horizon: int,
        deployment_threshold: float = 0.95,
        rule_name: str = "custom",
    ):
        if horizon < 1:
            raise ConfigError("horizon must be at least 1")
        if len(lower_thresholds) != horizon:
            raise ConfigError("one lower threshold is required per interval")
        if any(not 0.0 <= h <= 1.0 for h in lower_thresholds):
            raise ConfigError("lower thresholds must lie in [0, 1]")
        if not 0.0 < deployment_threshold <= 1.0:
            raise ConfigError("deployment threshold must lie in (0, 1]")
        if len(network.targets) != 1:
            raise ConfigError("scenarios support exactly one target parameter")
        if len(costs.penalties) != horizon:
            raise ConfigError("penalty schedule must match the horizon")
        target = network.targets[0]
        if target not in costs.revenue:
            raise ConfigError(f"no revenue entry for target {target!r}")
        for a in network.activity_scope:
            if a not in costs.activity_costs or a not in costs.rework_bases:
                raise ConfigError(f"no cost entry for scope activity {a!r}")
        if not network.activity_scope:
            raise ConfigError("activity scope is empty")

        self.network = network
        self.costs = costs
        self.lower_thresholds = tuple(float(h) for h in lower_thresholds)
        self.deployment_threshold = float(deployment_threshold)
        self.horizon = int(horizon)
        self.rule_name = rule_name
        self.target = target
        self.revenue: Money = costs.revenue[target]
        self.scope: Tuple[str, ...] = network.activity_scope
        self._engine = network.engine()
        self._target_cache: Dict[Tuple[int, ...], float] = {}
        self._branch_cache: Dict[Tuple[Tuple[int, ...], str], float] = {}

    def initial_state(self) -> VerificationState:
        return VerificationState(self.scope, (UNVERIFIED,) * len(self.scope), 0)

    def posterior(self, state: VerificationState) -> float:
        """Confidence in the target parameter given the state's evidence."""
        hit = self._target_cache.get(state.results)
        if hit is not None:
            return hit
        p = self._engine.posterior(state_to_evidence(state), self.target)
        self._target_cache[state.results] = p
        return p

    def branch_probability(self, state: VerificationState, activity: str) -> float:
        """P(activity passes | state evidence)."""
        key = (state.results, activity)
        hit = self._branch_cache.get(key)
        if hit is not None:
            return hit
        p = self._engine.posterior(state_to_evidence(state), activity)
        self._branch_cache[key] = p
        return p

    def activity_cost(self, activity: str) -> Money:
        return self.costs.activity_costs[activity]


def load_scenario(
    network_file,
    cost_file,
    rule: str = "Low",
    horizon: int = 5,
    scope: Optional[str] = None,
    deployment_threshold: float = 0.95,
    rules_file=None,
) -> Scenario:
    """Assemble a scenario from its three input files.

    scope may name one of the network's stored scope lists; the network's
    joint distribution is untouched, only the selectable activities change.
    """
    network = load_network(network_file)
    if scope:
        if scope not in network.scopes:
            raise ConfigError(f"network has no scope named {scope!r}")
        network = network.restrict_scope(network.scopes[scope])
    costs = load_costs(cost_file, horizon)
    thresholds = rule_thresholds(rule, horizon, load_rules(rules_file))
    return Scenario(network, costs, thresholds, horizon,
                    deployment_threshold=deployment_threshold, rule_name=rule)


# ---------------------------------------------------------------------------
# bundled data

BUNDLED = {
    "exemplar": ("exemplar.network.json", "exemplar.costs.json"),
    "satellite": ("satellite.network.json", "satellite.costs.json"),
}

_NETWORK_CACHE: Dict[str, BayesNetwork] = {}


def bundled_text(name: str) -> str:
    return resources.files("veristrat.data").joinpath(name).read_text("utf-8")


def bundled_network(name: str) -> BayesNetwork:
    if name not in BUNDLED:
        raise ConfigError(f"unknown bundled network {name!r}")
    if name not in _NETWORK_CACHE:
        _NETWORK_CACHE[name] = network_from_dict(json.loads(bundled_text(BUNDLED[name][0])))
    return _NETWORK_CACHE[name]


def bundled_scenario(
    name: str,
    rule: str = "Low",
    horizon: int = 5,
    scope: Optional[str] = None,
    deployment_threshold: float = 0.95,
) -> Scenario:
    if name not in BUNDLED:
        raise ConfigError(f"unknown bundled scenario {name!r} (have: {', '.join(sorted(BUNDLED))})")
    cost_name = BUNDLED[name][1]
    network = bundled_network(name)
    if scope:
        if scope not in network.scopes:
            raise ConfigError(f"network has no scope named {scope!r}")
        network = network.restrict_scope(network.scopes[scope])
    costs = costs_from_dict(json.loads(bundled_text(cost_name)), horizon)
    thresholds = rule_thresholds(rule, horizon, load_rules())
    return Scenario(network, costs, thresholds, horizon,
                    deployment_threshold=deployment_threshold, rule_name=rule)
