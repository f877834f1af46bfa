"""Synthetic confidence-network generation.

Two named presets ship with the package: a four-activity exemplar used in
documentation and tests, and a notional satellite instrument with 29
activities and four nested activity scopes. Preset topology is fixed;
Noisy-OR leaks and weights for the satellite are drawn from a seeded stream
so regeneration is reproducible. A free-form random generator backs the
randomised test suites.
"""
from __future__ import annotations

import random
from typing import Dict, List, Optional, Sequence, Tuple

from .bayesnet import ACTIVITY, PARAMETER, BayesNetwork, BayesNode, NoisyOr
from .errors import ConfigError


def _node(nid: str, kind: str, parents: Sequence[str], leak: float, weights: Sequence[float]) -> BayesNode:
    return BayesNode(nid, kind, tuple(parents), NoisyOr(leak=leak, weights=tuple(weights)))


def exemplar_network(seed: int = 0) -> BayesNetwork:
    """Fixed four-activity, three-parameter demonstration network.

    theta1 is the deployment target. A2 checks the dominant subsystem, so a
    single A2 failure drags confidence under the 0.2 rework trigger, while a
    passing system-level A1 on its own lifts confidence past 0.95.
    """
    del seed  # the exemplar is fully pinned
    nodes = [
        _node("theta2", PARAMETER, (), 0.55, ()),
        _node("theta3", PARAMETER, (), 0.50, ()),
        _node("theta1", PARAMETER, ("theta2", "theta3"), 0.01, (0.80, 0.08)),
        _node("A1", ACTIVITY, ("theta1",), 0.05, (0.90,)),
        _node("A2", ACTIVITY, ("theta2",), 0.03, (0.93,)),
        _node("A3", ACTIVITY, ("theta3",), 0.04, (0.90,)),
        _node("A4", ACTIVITY, ("theta1",), 0.05, (0.85,)),
    ]
    return BayesNetwork(nodes, targets=("theta1",), activity_scope=("A1", "A2", "A3", "A4"))


# activity -> parameter parents for the satellite preset
_SATELLITE_ACTIVITIES: Tuple[Tuple[str, Tuple[str, ...]], ...] = (
    ("A22", ("theta3",)),
    ("A23", ("theta4",)),
    ("A24", ("theta3",)),
    ("A25", ("theta5",)),
    ("A26", ("theta4", "theta5")),
    ("A27", ("theta3",)),
    ("A28", ("theta4",)),
    ("A29", ("theta5",)),
    ("A30", ("theta1", "theta2")),
    ("A31", ("theta4",)),
    ("A32", ("theta5",)),
    ("A33", ("theta6",)),
    ("A34", ("theta6",)),
    ("A35", ("theta6",)),
    ("A36", ("theta6",)),
    ("A37", ("theta5", "theta6")),
    ("A38", ("theta4",)),
    ("A39", ("theta3",)),
    ("A40", ("theta5", "theta6")),
    ("A41", ("theta3", "theta5")),
    ("A42", ("theta6",)),
    ("A43", ("theta5",)),
    ("A44", ("theta1",)),
    ("A45", ("theta1",)),
    ("A46", ("theta2",)),
    ("A47", ("theta2",)),
    ("A48", ("theta1",)),
    ("A49", ("theta2",)),
    ("A50", ("theta2",)),
)

_SATELLITE_SCOPES: Dict[str, Tuple[str, ...]] = {
    "small": ("A22", "A23", "A24", "A25", "A26"),
    "medium": ("A22", "A23", "A24", "A25", "A26", "A27", "A32", "A38", "A39", "A41"),
    "large": (
        "A22", "A23", "A24", "A25", "A26", "A27", "A28", "A29", "A31", "A32",
        "A33", "A34", "A35", "A36", "A37", "A38", "A39", "A40", "A41", "A42", "A43",
    ),
    "full": tuple(a for a, _ in _SATELLITE_ACTIVITIES),
}


def satellite_network(seed: int = 7) -> BayesNetwork:
    """Notional optical-instrument network: 6 parameters, 29 activities.

    theta3 (image quality) is the target. theta4/theta5 are its contributing
    subsystems, theta6 covers degradation effects, theta1/theta2 are
    unrelated platform parameters that only the full scope can touch.
    """
    rng = random.Random(f"satellite:{seed}")
    nodes: List[BayesNode] = [
        _node("theta2", PARAMETER, (), round(rng.uniform(0.50, 0.65), 4), ()),
        _node("theta4", PARAMETER, (), round(rng.uniform(0.45, 0.60), 4), ()),
        _node("theta5", PARAMETER, (), round(rng.uniform(0.45, 0.60), 4), ()),
        _node("theta3", PARAMETER, ("theta4", "theta5"), round(rng.uniform(0.01, 0.05), 4),
              (round(rng.uniform(0.60, 0.75), 4), round(rng.uniform(0.60, 0.75), 4))),
        _node("theta1", PARAMETER, ("theta2", "theta4"), round(rng.uniform(0.02, 0.06), 4),
              (round(rng.uniform(0.60, 0.75), 4), round(rng.uniform(0.40, 0.55), 4))),
        _node("theta6", PARAMETER, ("theta5",), round(rng.uniform(0.05, 0.15), 4),
              (round(rng.uniform(0.60, 0.75), 4),)),
    ]
    for aid, parents in _SATELLITE_ACTIVITIES:
        # evidence per activity is deliberately weak so useful campaigns
        # need several corroborating results before deployment
        leak = round(rng.uniform(0.10, 0.20), 4)
        weights = tuple(round(rng.uniform(0.30, 0.50), 4) for _ in parents)
        nodes.append(_node(aid, ACTIVITY, parents, leak, weights))
    return BayesNetwork(
        nodes,
        targets=("theta3",),
        activity_scope=_SATELLITE_SCOPES["full"],
        scopes=_SATELLITE_SCOPES,
    )


def random_network(
    n_parameters: int,
    n_activities: int,
    seed: int,
    max_parents: int = 2,
) -> BayesNetwork:
    """Random Noisy-OR DAG: parameters feed parameters, activities observe them."""
    if n_parameters < 1 or n_activities < 1:
        raise ConfigError("need at least one parameter and one activity")
    rng = random.Random(f"random-net:{seed}")
    params = [f"theta{i + 1}" for i in range(n_parameters)]
    nodes: List[BayesNode] = []
    for i, pid in enumerate(params):
        pool = params[:i]
        k = rng.randint(0, min(max_parents, len(pool)))
        parents = tuple(sorted(rng.sample(pool, k)))
        leak = rng.uniform(0.3, 0.7) if not parents else rng.uniform(0.02, 0.2)
        weights = tuple(rng.uniform(0.4, 0.9) for _ in parents)
        nodes.append(_node(pid, PARAMETER, parents, leak, weights))
    scope = []
    for i in range(n_activities):
        aid = f"A{i + 1}"
        k = rng.randint(1, min(max_parents, len(params)))
        parents = tuple(sorted(rng.sample(params, k)))
        leak = rng.uniform(0.02, 0.2)
        weights = tuple(rng.uniform(0.4, 0.9) for _ in parents)
        nodes.append(_node(aid, ACTIVITY, parents, leak, weights))
        scope.append(aid)
    target = rng.choice(params)
    return BayesNetwork(nodes, targets=(target,), activity_scope=scope)


PRESETS = {
    "exemplar": exemplar_network,
    "satellite": satellite_network,
}


def generate(preset: str, seed: int = 0, n_parameters: Optional[int] = None,
             n_activities: Optional[int] = None) -> BayesNetwork:
    if preset == "random":
        if not n_parameters or not n_activities:
            raise ConfigError("random preset needs --parameters and --activities")
        return random_network(n_parameters, n_activities, seed)
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r} (have: exemplar, satellite, random)")
    return PRESETS[preset](seed)
