"""Comparison methods: fixed paths, Monte Carlo, dynamic MC, static trees.

Every method prices candidate strategies through the same tree evaluator as
the tempered search, so reported values differ only by how the strategy was
found, never by how it was valued.
"""
from __future__ import annotations

import random
import time
from dataclasses import dataclass
from itertools import permutations
from typing import Dict, List, Optional, Sequence, Tuple

from . import money
from .errors import ConfigError, InfeasibleError
from .explorer import Optimizer, build_hvt, pt_optimizer
from .ptengine import PtConfig, run
from .sampler import derive_seed, random_tree
from .scenario import Scenario, VerificationState
from .treespace import (
    ForesightTree,
    HindsightTree,
    RawTree,
    TreeEvaluator,
    tree_levels,
    trivial_fvt,
)

FP = "FP"
MC = "MC"
DMC = "DMC"
SFVT = "SFVT"
PTA = "PTA"

DEFAULT_FP_BUDGET = 1_000_000


@dataclass
class BaselineResult:
    method: str
    expected_value: float  # internal fixed-point scale
    wall_time: float
    iterations: int
    fvt: Optional[ForesightTree] = None
    hvt: Optional[HindsightTree] = None
    sequence: Optional[Tuple[str, ...]] = None


def sequence_tree(origin: VerificationState, sequence: Sequence[str],
                  horizon: int) -> RawTree:
    """Fixed activity order as a tree: one label per level, everywhere."""
    depth = max(horizon - origin.time, 0)
    size = 2 ** depth - 1
    labels: List[Optional[str]] = [None] * size
    for level, positions in enumerate(tree_levels(depth)):
        if level >= len(sequence):
            break
        for pos in positions:
            labels[pos] = sequence[level]
    return RawTree(origin, labels)


def fp_candidate_count(n_activities: int, horizon: int) -> int:
    total = 0
    product = 1
    for k in range(min(n_activities, horizon) + 1):
        total += product
        product *= n_activities - k
    return total


def fp_enumerate(scenario: Scenario, origin: Optional[VerificationState] = None,
                 budget: int = DEFAULT_FP_BUDGET,
                 evaluator: Optional[TreeEvaluator] = None) -> BaselineResult:
    """Exhaust every ordered activity sequence of length 0..T."""
    started = time.perf_counter()
    if origin is None:
        origin = scenario.initial_state()
    universe = origin.unverified()
    depth = max(scenario.horizon - origin.time, 0)
    count = fp_candidate_count(len(universe), depth)
    if count > budget:
        raise InfeasibleError(
            f"{count} fixed paths exceed the enumeration budget of {budget}")
    if evaluator is None:
        evaluator = TreeEvaluator(scenario)
    best_value: Optional[float] = None
    best_seq: Tuple[str, ...] = ()
    evaluated = 0
    for length in range(min(len(universe), depth) + 1):
        for seq in permutations(universe, length):
            value = evaluator.value(sequence_tree(origin, seq, scenario.horizon))
            evaluated += 1
            if best_value is None or value > best_value:
                best_value = value
                best_seq = seq
    fvt = evaluator.evaluate(sequence_tree(origin, best_seq, scenario.horizon))
    return BaselineResult(FP, best_value, time.perf_counter() - started,
                          evaluated, fvt=fvt, sequence=best_seq)


def mc_search(origin: VerificationState, scenario: Scenario, cfg: PtConfig,
              evaluator: Optional[TreeEvaluator] = None) -> BaselineResult:
    """Independent uniform tree samples under the shared convergence rule."""
    started = time.perf_counter()
    depth = max(scenario.horizon - origin.time, 0)
    feasible = (depth > 0 and origin.unverified()
                and scenario.posterior(origin) < scenario.deployment_threshold)
    if not feasible:
        fvt = trivial_fvt(origin, scenario)
        return BaselineResult(MC, fvt.expected_value,
                              time.perf_counter() - started, 0, fvt=fvt)
    if evaluator is None:
        evaluator = TreeEvaluator(scenario)
    rng = random.Random(derive_seed(cfg.seed, "mc", origin.key()))
    best_tree = random_tree(origin, depth, rng)
    best_value = evaluator.value(best_tree)
    found_at = 1
    iteration = 1
    while (iteration - found_at < cfg.convergence_length
           and iteration < cfg.max_iterations):
        iteration += 1
        candidate = random_tree(origin, depth, rng)
        value = evaluator.value(candidate)
        if value > best_value:
            best_value = value
            best_tree = candidate
            found_at = iteration
    return BaselineResult(MC, best_value, time.perf_counter() - started,
                          iteration, fvt=evaluator.evaluate(best_tree))


def mc_optimizer(state: VerificationState, scenario: Scenario, cfg: PtConfig,
                 evaluator: TreeEvaluator) -> ForesightTree:
    return mc_search(state, scenario, cfg, evaluator).fvt


def dmc_explore(scenario: Scenario, cfg: PtConfig,
                origin: Optional[VerificationState] = None) -> BaselineResult:
    """Hindsight tree whose per-state optimizer is plain Monte Carlo."""
    started = time.perf_counter()
    hvt = build_hvt(scenario, cfg, optimizer=mc_optimizer, origin=origin)
    return BaselineResult(DMC, hvt.expected_value,
                          time.perf_counter() - started,
                          len(hvt.states), hvt=hvt)


def sfvt(origin: VerificationState, scenario: Scenario,
         cfg: PtConfig) -> BaselineResult:
    """One tempered run at the origin, used statically ever after."""
    started = time.perf_counter()
    result = run(origin, scenario, cfg)
    return BaselineResult(SFVT, result.best_value,
                          time.perf_counter() - started,
                          result.iterations, fvt=result.best)


def pta(scenario: Scenario, cfg: PtConfig,
        origin: Optional[VerificationState] = None) -> BaselineResult:
    """Full approach: tempered search re-run at every reachable state."""
    started = time.perf_counter()
    hvt = build_hvt(scenario, cfg, optimizer=pt_optimizer, origin=origin)
    return BaselineResult(PTA, hvt.expected_value,
                          time.perf_counter() - started,
                          len(hvt.states), hvt=hvt)


METHODS = {
    PTA: lambda scenario, cfg: pta(scenario, cfg),
    FP: lambda scenario, cfg: fp_enumerate(scenario),
    MC: lambda scenario, cfg: mc_search(scenario.initial_state(), scenario, cfg),
    DMC: lambda scenario, cfg: dmc_explore(scenario, cfg),
    SFVT: lambda scenario, cfg: sfvt(scenario.initial_state(), scenario, cfg),
}


def compare(scenario: Scenario, cfg: PtConfig,
            methods: Sequence[str] = (PTA, FP, MC, DMC, SFVT),
            fp_budget: int = DEFAULT_FP_BUDGET) -> List[BaselineResult]:
    """Run the requested methods on one scenario with a shared seed."""
    results = []
    for name in methods:
        key = name.upper()
        if key not in METHODS:
            raise ConfigError(f"unknown method {name!r} (have: {', '.join(METHODS)})")
        if key == FP:
            results.append(fp_enumerate(scenario, budget=fp_budget))
        else:
            results.append(METHODS[key](scenario, cfg))
    return results


def compare_rows(results: Sequence[BaselineResult], rule: str, scope: str,
                 timing: bool = False) -> List[dict]:
    """CSV-shaped rows; wall time is zeroed unless timing was requested."""
    return [
        {
            "method": r.method,
            "reworkRule": rule,
            "scope": scope,
            "expectedValue": r.expected_value / money.SCALE,
            "wallTimeSeconds": round(r.wall_time, 3) if timing else 0.0,
        }
        for r in results
    ]
