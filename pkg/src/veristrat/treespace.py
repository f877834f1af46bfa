"""Tree-valued verification strategies and their exact valuation.

A raw verification tree (RVT) is a complete binary tree of activity labels
over the unverified scope, heap-indexed: node i branches true into 2i+1 and
false into 2i+2. `NA` (stored as None) marks a deliberate stop. Evaluating
an RVT against a scenario produces a foresight tree (FVT): each node is
priced, failures whose posterior drops under the interval's lower threshold
are reworked (flipped to success, the failure subtree pruned), and paths
terminate on deployment (posterior at or above the upper threshold), on NA,
or when the horizon exhausts the tree.

The hindsight tree (HVT) stitches per-state near-optimal root actions over
every reachable state; it is built by the explorer but its value semantics
live here so foresight and hindsight trees are priced identically.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import fsum
from typing import Dict, List, Optional, Sequence, Tuple

from .money import Money
from .scenario import (
    Scenario,
    VerificationState,
    apply_result,
    apply_rework,
    rework_cost,
)

DEPLOYED = "deployed"
NA_STOP = "na_stop"
HORIZON = "horizon_end"
UNRECOVERABLE = "unrecoverable"


class TreeError(ValueError):
    """Malformed raw tree."""


class RawTree:
    """Immutable complete-binary label array bound to its origin state."""

    __slots__ = ("origin", "labels", "depth", "universe")

    def __init__(self, origin: VerificationState, labels: Sequence[Optional[str]],
                 universe: Optional[Tuple[str, ...]] = None):
        self.origin = origin
        self.labels: Tuple[Optional[str], ...] = tuple(labels)
        self.depth = (len(self.labels) + 1).bit_length() - 1
        self.universe = origin.unverified() if universe is None else universe

    def key(self) -> Tuple:
        return (self.origin.key(), self.labels)

    def __eq__(self, other):
        return isinstance(other, RawTree) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"RawTree(t={self.origin.time}, labels={self.labels!r})"


def tree_levels(depth: int) -> List[range]:
    return [range(2 ** lv - 1, 2 ** (lv + 1) - 1) for lv in range(depth)]


def leaf_paths(size: int):
    """Position lists of every root-to-leaf path of a heap of `size` nodes."""
    first_leaf = size // 2
    for leaf in range(first_leaf, size):
        path = []
        pos = leaf
        while True:
            path.append(pos)
            if pos == 0:
                break
            pos = (pos - 1) // 2
        yield path[::-1]


def validate_tree(tree: RawTree) -> None:
    """Raise TreeError unless the tree satisfies every structural rule."""
    size = 2 ** tree.depth - 1
    if len(tree.labels) != size:
        raise TreeError(f"expected {size} labels, got {len(tree.labels)}")
    allowed = set(tree.universe)
    for lab in tree.labels:
        if lab is not None and lab not in allowed:
            raise TreeError(f"label {lab!r} is not an unverified scope activity")
    for path in leaf_paths(size):
        seen = set()
        for pos in path:
            lab = tree.labels[pos]
            if lab is None:
                continue
            if lab in seen:
                raise TreeError(f"activity {lab!r} repeats along a root-to-leaf path")
            seen.add(lab)


# ---------------------------------------------------------------------------
# foresight trees


@dataclass(frozen=True)
class PathStep:
    activity: str
    result: bool
    rework: bool
    posterior_after: float
    rework_cost: Money = 0


@dataclass(frozen=True)
class Path:
    steps: Tuple[PathStep, ...]
    probability: float
    stop_reason: str
    end_state: VerificationState
    activity_cost: Money
    rework_cost: Money
    terminal_value: Money

    @property
    def posterior(self) -> float:
        return self.steps[-1].posterior_after if self.steps else float("nan")


@dataclass(frozen=True)
class FvtBranch:
    result: bool
    probability: float
    posterior: float  # observed confidence right after the result
    rework: bool
    rework_cost: Optional[Money]
    child: "FvtNode"


@dataclass(frozen=True)
class FvtNode:
    kind: str  # "activity" or one of the stop reasons
    activity: Optional[str] = None
    posterior: float = float("nan")
    branches: Tuple[FvtBranch, ...] = ()


@dataclass(frozen=True)
class ForesightTree:
    origin: VerificationState
    root: FvtNode
    paths: Tuple[Path, ...]
    expected_value: float
    source_labels: Tuple[Optional[str], ...]


def revenue_at(scenario: Scenario, p: float) -> Money:
    """Deployment revenue component: strictly above-threshold confidence pays."""
    if p > scenario.deployment_threshold:
        return round(scenario.revenue * p)
    return 0


def path_value(scenario: Scenario, end_state: VerificationState,
               activity_cost: Money, rework_cost_total: Money) -> Money:
    """Terminal worth of one realised path: revenue minus the two ledgers."""
    p = scenario.posterior(end_state)
    return revenue_at(scenario, p) - activity_cost - rework_cost_total


def expected_value(fvt: ForesightTree) -> float:
    """Probability-weighted terminal value over the tree's paths."""
    return fsum(p.probability * p.terminal_value for p in fvt.paths)


def _check_depth(tree: RawTree, scenario: Scenario) -> None:
    want = max(scenario.horizon - tree.origin.time, 0)
    if tree.depth != want:
        raise TreeError(f"tree depth {tree.depth} does not span the remaining horizon {want}")


def evaluate_rvt(tree: RawTree, scenario: Scenario) -> ForesightTree:
    """Price a raw tree: full foresight tree with paths and expected value."""
    _check_depth(tree, scenario)
    labels = tree.labels
    size = len(labels)
    origin = tree.origin
    lower = scenario.lower_thresholds
    upper = scenario.deployment_threshold
    addends: List[float] = []
    paths: List[Path] = []

    def close(steps, prob, reason, state, act_cost, rw_cost):
        value = path_value(scenario, state, act_cost, rw_cost)
        paths.append(Path(tuple(steps), prob, reason, state, act_cost, rw_cost, value))
        addends.append(prob * value)

    p0 = scenario.posterior(origin)
    if p0 >= upper:
        root = FvtNode(kind=DEPLOYED, posterior=p0)
        close([], 1.0, DEPLOYED, origin, 0, 0)
        return ForesightTree(origin, root, tuple(paths), fsum(addends), labels)
    if tree.depth == 0 or origin.time >= scenario.horizon:
        root = FvtNode(kind=HORIZON, posterior=p0)
        close([], 1.0, HORIZON, origin, 0, 0)
        return ForesightTree(origin, root, tuple(paths), fsum(addends), labels)

    def build(pos: int, state: VerificationState, prob: float,
              steps: List[PathStep], act_cost: Money, rw_cost: Money) -> FvtNode:
        label = labels[pos] if pos < size else None
        here_p = scenario.posterior(state)
        if label is None:
            close(steps, prob, NA_STOP, state, act_cost, rw_cost)
            return FvtNode(kind=NA_STOP, posterior=here_p)
        t_exec = state.time
        act_cost = act_cost + scenario.activity_cost(label)
        p_true = scenario.branch_probability(state, label)
        branches: List[FvtBranch] = []
        for result in (True, False):
            p_branch = p_true if result else 1.0 - p_true
            if p_branch <= 0.0:
                continue
            after = apply_result(state, label, result)
            p_after = scenario.posterior(after)
            reworked = False
            rw_here: Optional[Money] = None
            if not result and p_after < lower[t_exec]:
                reworked = True
                rw_here = rework_cost(scenario.costs, label, t_exec)
                after = apply_rework(after, label)
            p_eff = scenario.posterior(after)
            step = PathStep(label, result, reworked, p_eff, rw_here or 0)
            child_prob = prob * p_branch
            child_steps = steps + [step]
            child_rw = rw_cost + (rw_here or 0)
            if p_eff >= upper:
                close(child_steps, child_prob, DEPLOYED, after, act_cost, child_rw)
                child = FvtNode(kind=DEPLOYED, posterior=p_eff)
            else:
                child_pos = 2 * pos + 1 if (result or reworked) else 2 * pos + 2
                if child_pos >= size:
                    close(child_steps, child_prob, HORIZON, after, act_cost, child_rw)
                    child = FvtNode(kind=HORIZON, posterior=p_eff)
                else:
                    child = build(child_pos, after, child_prob, child_steps, act_cost, child_rw)
            branches.append(FvtBranch(result, p_branch, p_after, reworked, rw_here, child))
        return FvtNode(kind="activity", activity=label, posterior=here_p,
                       branches=tuple(branches))

    root = build(0, origin, 1.0, [], 0, 0)
    return ForesightTree(origin, root, tuple(paths), fsum(addends), labels)


def trivial_fvt(origin: VerificationState, scenario: Scenario) -> ForesightTree:
    """Degenerate strategy for origins with no admissible move."""
    depth = max(scenario.horizon - origin.time, 0)
    return evaluate_rvt(RawTree(origin, (None,) * (2 ** depth - 1)), scenario)


class TreeEvaluator:
    """Caches expected values per (origin, labels); search calls this path."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self._values: Dict[Tuple, float] = {}

    def value(self, tree: RawTree) -> float:
        key = (tree.origin.key(), tree.labels)
        hit = self._values.get(key)
        if hit is not None:
            return hit
        v = self._value_walk(tree)
        self._values[key] = v
        return v

    def evaluate(self, tree: RawTree) -> ForesightTree:
        return evaluate_rvt(tree, self.scenario)

    def _value_walk(self, tree: RawTree) -> float:
        scenario = self.scenario
        _check_depth(tree, scenario)
        labels = tree.labels
        size = len(labels)
        lower = scenario.lower_thresholds
        upper = scenario.deployment_threshold
        posterior = scenario.posterior
        branch_probability = scenario.branch_probability
        addends: List[float] = []

        p0 = posterior(tree.origin)
        if p0 >= upper:
            return float(revenue_at(scenario, p0))
        if tree.depth == 0 or tree.origin.time >= scenario.horizon:
            return 0.0

        stack = [(0, tree.origin, 1.0, 0)]
        while stack:
            pos, state, prob, spent = stack.pop()
            label = labels[pos] if pos < size else None
            if label is None:
                addends.append(prob * -spent)
                continue
            t_exec = state.time
            spent = spent + scenario.activity_cost(label)
            p_true = branch_probability(state, label)
            for result in (True, False):
                p_branch = p_true if result else 1.0 - p_true
                if p_branch <= 0.0:
                    continue
                after = apply_result(state, label, result)
                cost_here = spent
                effective = result
                if not result and posterior(after) < lower[t_exec]:
                    cost_here = cost_here + rework_cost(scenario.costs, label, t_exec)
                    after = apply_rework(after, label)
                    effective = True
                p_eff = posterior(after)
                child_prob = prob * p_branch
                if p_eff >= upper:
                    addends.append(child_prob * (revenue_at(scenario, p_eff) - cost_here))
                    continue
                child_pos = 2 * pos + 1 if effective else 2 * pos + 2
                if child_pos >= size:
                    addends.append(child_prob * -cost_here)
                else:
                    stack.append((child_pos, after, child_prob, cost_here))
        return fsum(addends)


# ---------------------------------------------------------------------------
# hindsight trees

StateKey = Tuple[Tuple[int, ...], int]


@dataclass(frozen=True)
class HvtBranch:
    result: bool
    probability: float
    posterior: float  # observed right after the result, before any rework
    rework: bool
    rework_cost: Optional[Money]
    child: StateKey


@dataclass(frozen=True)
class HvtState:
    state: VerificationState
    kind: str  # "decision", "deployed", "horizon_end", "unrecoverable"
    posterior: float
    action: Optional[str] = None
    action_cost: Money = 0
    terminal_value: Money = 0
    fvt_value: Optional[float] = None
    branches: Tuple[HvtBranch, ...] = ()


@dataclass
class HindsightTree:
    root: StateKey
    states: Dict[StateKey, HvtState]
    expected_value: float = 0.0


class HvtError(ValueError):
    """Hindsight tree refers to a state it does not contain."""


def hvt_paths(hvt: HindsightTree):
    """Yield (arcs, probability, spent, terminal_state_key) over all paths.

    Arcs are (state_key, branch) pairs in execution order; spent is the
    fixed-point cost accumulated on the way (activities plus rework).
    """
    def walk(key: StateKey, arcs, prob: float, spent: Money):
        try:
            node = hvt.states[key]
        except KeyError:
            raise HvtError(f"unresolved state {key!r}") from None
        if node.kind != "decision":
            yield (tuple(arcs), prob, spent, key)
            return
        spent = spent + node.action_cost
        for br in node.branches:
            extra = br.rework_cost if br.rework_cost else 0
            yield from walk(br.child, arcs + [(key, br)], prob * br.probability, spent + extra)

    yield from walk(hvt.root, [], 1.0, 0)


def hvt_expected_value(hvt: HindsightTree) -> float:
    """Probability-weighted terminal value across every hindsight path."""
    addends = []
    for _, prob, spent, end_key in hvt_paths(hvt):
        terminal = hvt.states[end_key].terminal_value
        addends.append(prob * (terminal - spent))
    return fsum(addends)


def hvt_leaf_path_count(hvt: HindsightTree) -> int:
    return sum(1 for _ in hvt_paths(hvt))


# ---------------------------------------------------------------------------
# serialisation


def _money_out(amount: Optional[Money]):
    from . import money
    return None if amount is None else money.to_display(amount)


def fvt_node_to_dict(node: FvtNode) -> dict:
    if node.kind != "activity":
        return {"stop": node.kind, "posterior": node.posterior}
    return {
        "action": node.activity,
        "posterior": node.posterior,
        "branch": [
            {
                "result": br.result,
                "probability": br.probability,
                "posterior": br.posterior,
                "rework": br.rework,
                "reworkCost": _money_out(br.rework_cost),
                "child": fvt_node_to_dict(br.child),
            }
            for br in node.branches
        ],
    }


def fvt_to_dict(fvt: ForesightTree) -> dict:
    return {
        "origin": fvt.origin.to_dict(),
        "expectedValue": fvt.expected_value / 1000.0,
        "root": fvt_node_to_dict(fvt.root),
        "paths": [
            {
                "steps": [
                    {
                        "activity": s.activity,
                        "result": s.result,
                        "rework": s.rework,
                        "posterior": s.posterior_after,
                        "reworkCost": _money_out(s.rework_cost) if s.rework else None,
                    }
                    for s in p.steps
                ],
                "probability": p.probability,
                "stop": p.stop_reason,
                "value": _money_out(p.terminal_value),
            }
            for p in fvt.paths
        ],
    }


_STOP_GLYPH = {DEPLOYED: "deploy", NA_STOP: "stop", HORIZON: "horizon", UNRECOVERABLE: "stop"}


def fvt_to_dot(fvt: ForesightTree) -> str:
    """Graphviz rendering; rework arcs are dashed, per the house convention."""
    lines = ["digraph fvt {", '  node [shape=box, fontsize=10];']
    counter = [0]

    def emit(node: FvtNode) -> str:
        nid = f"n{counter[0]}"
        counter[0] += 1
        if node.kind != "activity":
            lines.append(f'  {nid} [label="{_STOP_GLYPH[node.kind]}\\np={node.posterior:.3f}", shape=ellipse];')
            return nid
        lines.append(f'  {nid} [label="{node.activity}"];')
        for br in node.branches:
            cid = emit(br.child)
            style = ", style=dashed" if br.rework else ""
            tag = "T" if br.result else "F"
            if br.rework:
                tag += " rw"
            lines.append(f'  {nid} -> {cid} [label="{tag} {br.probability:.3f}"{style}];')
        return nid

    emit(fvt.root)
    lines.append("}")
    return "\n".join(lines) + "\n"


def _key_str(key: StateKey) -> str:
    results, t = key
    return "s" + "".join({1: "p", -1: "f", 0: "u"}[r] for r in results) + f"t{t}"


def hvt_to_dict(hvt: HindsightTree) -> dict:
    states = {}
    for key, node in hvt.states.items():
        entry = {
            "state": node.state.to_dict(),
            "kind": node.kind,
            "posterior": node.posterior,
        }
        if node.kind == "decision":
            entry["action"] = node.action
            entry["actionCost"] = _money_out(node.action_cost)
            if node.fvt_value is not None:
                entry["fvtValue"] = node.fvt_value / 1000.0
            entry["branch"] = [
                {
                    "result": br.result,
                    "probability": br.probability,
                    "posterior": br.posterior,
                    "rework": br.rework,
                    "reworkCost": _money_out(br.rework_cost),
                    "child": _key_str(br.child),
                }
                for br in node.branches
            ]
        else:
            entry["terminalValue"] = _money_out(node.terminal_value)
        states[_key_str(key)] = entry
    return {
        "root": _key_str(hvt.root),
        "expectedValue": hvt.expected_value / 1000.0,
        "states": states,
    }


def hvt_to_dot(hvt: HindsightTree) -> str:
    lines = ["digraph hvt {", '  node [shape=box, fontsize=10];']
    for key, node in hvt.states.items():
        nid = _key_str(key)
        if node.kind == "decision":
            lines.append(f'  {nid} [label="{node.action}\\np={node.posterior:.3f}"];')
            for br in node.branches:
                style = ", style=dashed" if br.rework else ""
                tag = "T" if br.result else "F"
                if br.rework:
                    tag += " rw"
                lines.append(f'  {nid} -> {_key_str(br.child)} [label="{tag} {br.probability:.3f}"{style}];')
        else:
            glyph = _STOP_GLYPH.get(node.kind, node.kind)
            lines.append(f'  {nid} [label="{glyph}\\np={node.posterior:.3f}", shape=ellipse];')
    lines.append("}")
    return "\n".join(lines) + "\n"
