"""Assemble hindsight trees by re-optimizing at every reachable state.

Starting from an origin state, the explorer asks a per-state optimizer for
the best strategy tree, takes its root action, and expands the true/false
outcome states (applying the rework rule to failures) until every path ends
in deployment, a stop, or the horizon. States are memoised by their result
vector and time, so the walk is breadth-first over unique states and the
result is independent of visit order.
"""
from __future__ import annotations

import dataclasses
from collections import deque
from math import fsum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from . import money
from .ptengine import PtConfig, run
from .scenario import Scenario, VerificationState, apply_result, apply_rework, rework_cost
from .treespace import (
    ForesightTree,
    HindsightTree,
    HvtBranch,
    HvtError,
    HvtState,
    RawTree,
    StateKey,
    TreeEvaluator,
    hvt_expected_value,
    hvt_paths,
    revenue_at,
)

Optimizer = Callable[[VerificationState, Scenario, PtConfig, TreeEvaluator], ForesightTree]


def pt_optimizer(state: VerificationState, scenario: Scenario, cfg: PtConfig,
                 evaluator: TreeEvaluator) -> ForesightTree:
    """Tempered search; the default per-state optimizer."""
    return run(state, scenario, cfg, evaluator).best


def build_hvt(scenario: Scenario, cfg: PtConfig,
              optimizer: Optimizer = pt_optimizer,
              origin: Optional[VerificationState] = None) -> HindsightTree:
    """Stitch per-state optimal root actions into a hindsight tree."""
    if origin is None:
        origin = scenario.initial_state()
    evaluator = TreeEvaluator(scenario)
    upper = scenario.deployment_threshold
    states: Dict[StateKey, HvtState] = {}
    queue = deque([origin])
    while queue:
        state = queue.popleft()
        key = state.key()
        if key in states:
            continue
        p = scenario.posterior(state)
        if p >= upper:
            states[key] = HvtState(state, "deployed", p,
                                   terminal_value=revenue_at(scenario, p))
            continue
        if state.time >= scenario.horizon:
            states[key] = HvtState(state, "horizon_end", p)
            continue
        try:
            fvt = optimizer(state, scenario, cfg, evaluator)
        except Exception as err:
            raise HvtError(f"optimizer failed at state {key!r}: {err}") from err
        if fvt.root.kind != "activity":
            states[key] = HvtState(state, "unrecoverable", p,
                                   fvt_value=fvt.expected_value)
            continue
        action = fvt.root.activity
        t_exec = state.time
        p_true = scenario.branch_probability(state, action)
        branches: List[HvtBranch] = []
        for result in (True, False):
            p_branch = p_true if result else 1.0 - p_true
            if p_branch <= 0.0:
                continue
            after = apply_result(state, action, result)
            p_after = scenario.posterior(after)
            reworked = False
            rw_here = None
            if not result and p_after < scenario.lower_thresholds[t_exec]:
                reworked = True
                rw_here = rework_cost(scenario.costs, action, t_exec)
                after = apply_rework(after, action)
            branches.append(HvtBranch(result, p_branch, p_after, reworked,
                                      rw_here, after.key()))
            queue.append(after)
        states[key] = HvtState(state, "decision", p, action=action,
                               action_cost=scenario.activity_cost(action),
                               fvt_value=fvt.expected_value,
                               branches=tuple(branches))
    hvt = HindsightTree(origin.key(), states)
    hvt.expected_value = hvt_expected_value(hvt)
    return hvt


def exhaustive_optimizer(state: VerificationState, scenario: Scenario,
                         cfg: PtConfig, evaluator: TreeEvaluator) -> ForesightTree:
    """Try every canonical labeling; exact but only viable on tiny cases."""
    depth = max(scenario.horizon - state.time, 0)
    best: Optional[Tuple[float, Tuple[Optional[str], ...]]] = None
    for labels in canonical_labelings(state.unverified(), depth):
        value = evaluator.value(RawTree(state, labels))
        if best is None or value > best[0]:
            best = (value, labels)
    return evaluator.evaluate(RawTree(state, best[1]))


def canonical_labelings(universe: Sequence[str], depth: int):
    """Every valid labeling whose subtrees below an NA node are all NA."""
    size = 2 ** depth - 1
    if size == 0:
        yield ()
        return
    labels: List[Optional[str]] = [None] * size

    def step(pos: int):
        if pos == size:
            yield tuple(labels)
            return
        parent = (pos - 1) // 2
        if pos > 0 and labels[parent] is None:
            labels[pos] = None
            yield from step(pos + 1)
            return
        banned = set()
        anc = pos
        while anc > 0:
            anc = (anc - 1) // 2
            if labels[anc] is not None:
                banned.add(labels[anc])
        for choice in [a for a in universe if a not in banned] + [None]:
            labels[pos] = choice
            yield from step(pos + 1)
        labels[pos] = None

    yield from step(0)


def value_plot_data(hvt: HindsightTree, scenario: Scenario) -> dict:
    """Per-path value trajectories over time plus the expectation series."""
    horizon = scenario.horizon
    cont = continuation_values(hvt)
    root_value = cont[hvt.root]
    series = []
    for idx, (arcs, prob, spent, end_key) in enumerate(hvt_paths(hvt)):
        occupied: Dict[int, Tuple[StateKey, float]] = {}
        running: float = 0.0
        key = hvt.root
        occupied[hvt.states[key].state.time] = (key, running)
        for state_key, branch in arcs:
            node = hvt.states[state_key]
            running += float(node.action_cost)
            if branch.rework_cost:
                running += float(branch.rework_cost)
            key = branch.child
            occupied[hvt.states[key].state.time] = (key, running)
        final = float(hvt.states[end_key].terminal_value) - spent
        values = []
        last = None
        for t in range(horizon + 1):
            if t in occupied:
                k, spent_so_far = occupied[t]
                last = cont[k] - spent_so_far
            values.append(last)
        label = "".join(
            f"{hvt.states[sk].action}{'+' if br.result else '-'}{'r' if br.rework else ''}"
            for sk, br in arcs)
        series.append({
            "path": idx,
            "label": label or "(none)",
            "probability": prob,
            "final": final / money.SCALE,
            "tag": "above" if final >= root_value else "below",
            "values": [v / money.SCALE for v in values],
        })
    expected = [fsum(s["probability"] * s["values"][t] for s in series)
                for t in range(horizon + 1)]
    return {
        "horizon": horizon,
        "expectedValue": hvt.expected_value / money.SCALE,
        "series": series,
        "expected": expected,
    }


def continuation_values(hvt: HindsightTree) -> Dict[StateKey, float]:
    """Forward-looking value of each state under the tree's own actions."""
    memo: Dict[StateKey, float] = {}

    def value(key: StateKey) -> float:
        hit = memo.get(key)
        if hit is not None:
            return hit
        node = hvt.states[key]
        if node.kind != "decision":
            v = float(node.terminal_value)
        else:
            addends = [-float(node.action_cost)]
            for br in node.branches:
                rw = float(br.rework_cost) if br.rework_cost else 0.0
                addends.append(br.probability * (value(br.child) - rw))
            v = fsum(addends)
        memo[key] = v
        return v

    value(hvt.root)
    for key in hvt.states:
        value(key)
    return memo


def convergence_sweep(scenario: Scenario, cfg: PtConfig,
                      lengths: Sequence[int]) -> dict:
    """One seeded run per convergence length; reports the value plateau."""
    evaluator = TreeEvaluator(scenario)
    origin = scenario.initial_state()
    lengths = list(lengths)
    values: List[float] = []
    iterations: List[int] = []
    for length in lengths:
        cfg_l = dataclasses.replace(cfg, convergence_length=length)
        result = run(origin, scenario, cfg_l, evaluator)
        values.append(result.best_value)
        iterations.append(result.iterations)
    plateau = lengths[-1] if lengths else None
    for i in range(len(lengths) - 1, -1, -1):
        if values[i] != values[-1]:
            break
        plateau = lengths[i]
    return {
        "lengths": lengths,
        "values": [v / money.SCALE for v in values],
        "iterations": iterations,
        "plateau": plateau,
    }
