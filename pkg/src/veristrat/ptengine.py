"""Parallel-tempering search over verification strategy trees.

M replicas explore the tradespace at fixed temperatures. Each window every
replica takes a batch of Metropolis steps on its own random stream, then
neighbouring replicas attempt to swap configurations. The incumbent is the
best strategy any chain has occupied; the run stops once it survives a full
convergence length without improvement.

Temperatures and the energy-difference bounds live in display money units;
replica energies are internal fixed-point values and are rescaled before any
temperature arithmetic.
"""
from __future__ import annotations

import math
import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from . import money
from .errors import ConfigError
from .sampler import EXCHANGE_PROBABILITY, derive_seed, propose, random_tree
from .scenario import Scenario, VerificationState
from .treespace import ForesightTree, RawTree, TreeEvaluator, evaluate_rvt, trivial_fvt

WORKERS_ENV = "VERISTRAT_WORKERS"

DEFAULT_LADDER = (10.0, 20.0, 39.0, 78.0, 156.0, 312.0, 625.0, 1250.0, 2500.0,
                  5000.0, 10000.0, 20000.0, 40000.0, 80000.0, 160000.0)


def worker_count() -> int:
    """Thread fan-out for replica windows; never affects results."""
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class TemperatureLadder:
    temps: Tuple[float, ...]
    interval: Optional[Tuple[float, float]] = None
    warnings: Tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.temps) < 2:
            raise ConfigError("a temperature ladder needs at least two rungs")
        if any(t <= 0 for t in self.temps):
            raise ConfigError("temperatures must be positive")
        if any(b <= a for a, b in zip(self.temps, self.temps[1:])):
            raise ConfigError("temperatures must increase strictly")

    def pair_delta_betas(self) -> Tuple[float, ...]:
        return tuple(1.0 / a - 1.0 / b for a, b in zip(self.temps, self.temps[1:]))


@dataclass(frozen=True)
class PtConfig:
    n_it: int = 50
    convergence_length: int = 1000
    max_iterations: int = 1_000_000
    c1: float = 0.05
    c2: float = 0.05
    c3: float = 2.0
    delta_e_thres: float = 100.0
    delta_e_max: float = 380_000.0
    exchange_probability: float = EXCHANGE_PROBABILITY
    seed: int = 0
    ladder: Optional[Tuple[float, ...]] = None
    replicas: Optional[int] = None

    def __post_init__(self):
        if self.n_it < 1:
            raise ConfigError("window length must be at least 1 iteration")
        if self.convergence_length < 1 or self.convergence_length % self.n_it:
            raise ConfigError("convergence length must be a positive multiple of the window length")
        if self.max_iterations < self.n_it:
            raise ConfigError("iteration cap below a single window")
        if not 0.0 < self.c1 < 1.0 or not 0.0 < self.c2 < 1.0:
            raise ConfigError("acceptance design thresholds must lie in (0, 1)")
        if self.c3 <= 1.0:
            raise ConfigError("ladder ratio must exceed 1")
        if self.delta_e_thres <= 0 or self.delta_e_max <= 0:
            raise ConfigError("energy-difference bounds must be positive")
        if not 0.0 <= self.exchange_probability <= 1.0:
            raise ConfigError("move mixture must lie in [0, 1]")
        if self.replicas is not None:
            if self.ladder is not None:
                raise ConfigError("replica count conflicts with an explicit ladder")
            if self.replicas < 2:
                raise ConfigError("at least two replicas are required")


def delta_beta_interval(cfg: PtConfig) -> Tuple[float, float]:
    """Admissible range for neighbour inverse-temperature gaps."""
    low = -math.log(cfg.c1) / cfg.delta_e_max
    high = -math.log(cfg.c2) / cfg.delta_e_thres
    if low >= high:
        raise ConfigError(
            f"inadmissible ladder design: delta-beta interval [{low:g}, {high:g}] is empty")
    return low, high


def build_ladder(cfg: PtConfig) -> TemperatureLadder:
    """Explicit user ladder, or a geometric one covering the design interval."""
    low, high = delta_beta_interval(cfg)
    if cfg.ladder is not None:
        temps = tuple(float(t) for t in cfg.ladder)
        probe = TemperatureLadder(temps, (low, high))
        warnings = tuple(
            f"pair {_fmt_temp(a)}-{_fmt_temp(b)}: delta-beta {db:g} outside [{low:g}, {high:g}]"
            for (a, b), db in zip(zip(temps, temps[1:]), probe.pair_delta_betas())
            if not low <= db <= high
        )
        return TemperatureLadder(temps, (low, high), warnings)

    gap = 1.0 - 1.0 / cfg.c3
    base = gap / high  # coldest rung; its pair sits exactly on the upper bound
    top = gap / low    # hottest rung whose pair still meets the lower bound
    temps = [base]
    while temps[-1] <= top:
        temps.append(temps[-1] * cfg.c3)
    warnings: List[str] = []
    if cfg.replicas is not None:
        if cfg.replicas > len(temps):
            warnings.append(
                f"extending past the design interval to reach {cfg.replicas} replicas")
            while len(temps) < cfg.replicas:
                temps.append(temps[-1] * cfg.c3)
        elif cfg.replicas < len(temps):
            warnings.append(
                f"truncated to {cfg.replicas} replicas; ladder no longer spans the interval")
            temps = temps[:cfg.replicas]
    return TemperatureLadder(tuple(temps), (low, high), tuple(warnings))


def metropolis_accept(delta_e: float, temperature: float, rng: random.Random) -> bool:
    """Maximisation Metropolis rule at one replica's temperature."""
    if delta_e >= 0.0:
        return True
    return rng.random() < math.exp(delta_e / temperature)


def swap_accept_prob(e_low: float, e_high: float, t_low: float, t_high: float) -> float:
    """Probability that two neighbouring replicas exchange configurations."""
    if not t_low < t_high:
        raise ConfigError("neighbour temperatures must satisfy t_low < t_high")
    arg = -(1.0 / t_low - 1.0 / t_high) * (e_low - e_high)
    if arg >= 0.0:
        return 1.0
    return math.exp(arg)


# ---------------------------------------------------------------------------
# run loop


@dataclass
class _Replica:
    temperature: float
    tree: RawTree
    energy: float  # internal fixed-point scale
    rng: random.Random


@dataclass(frozen=True)
class WindowRecord:
    iteration: int
    best_value: float  # display units
    energies: Tuple[float, ...]  # display units, coldest first
    swap_accepts: Tuple[bool, ...]


@dataclass
class PtResult:
    best: ForesightTree
    best_value: float  # internal fixed-point scale
    iterations: int
    iteration_found: int
    converged: bool
    ladder: TemperatureLadder
    windows: List[WindowRecord] = field(default_factory=list)
    swap_probabilities: List[Tuple[float, ...]] = field(default_factory=list)


def _replica_window(replica: _Replica, evaluator: TreeEvaluator, n_it: int,
                    start_iter: int, exchange_probability: float):
    """Advance one replica by a window; report its best visited state."""
    best_v = replica.energy
    best_i = start_iter
    best_tree = replica.tree
    for i in range(n_it):
        candidate = propose(replica.tree, replica.rng, exchange_probability)
        e_new = evaluator.value(candidate)
        delta = (e_new - replica.energy) / money.SCALE
        if metropolis_accept(delta, replica.temperature, replica.rng):
            replica.tree = candidate
            replica.energy = e_new
        if replica.energy > best_v:
            best_v = replica.energy
            best_i = start_iter + i + 1
            best_tree = replica.tree
    return best_v, best_i, best_tree


def run(origin: VerificationState, scenario: Scenario, cfg: PtConfig,
        evaluator: Optional[TreeEvaluator] = None) -> PtResult:
    """Search for the best strategy tree rooted at the given state."""
    ladder = build_ladder(cfg)
    depth = max(scenario.horizon - origin.time, 0)
    feasible = (depth > 0 and origin.unverified()
                and scenario.posterior(origin) < scenario.deployment_threshold)
    if not feasible:
        fvt = trivial_fvt(origin, scenario)
        return PtResult(fvt, fvt.expected_value, 0, 0, True, ladder)

    if evaluator is None:
        evaluator = TreeEvaluator(scenario)
    temps = ladder.temps
    replicas: List[_Replica] = []
    for m, temp in enumerate(temps):
        rng = random.Random(derive_seed(cfg.seed, "replica", m, origin.key()))
        tree = random_tree(origin, depth, rng)
        replicas.append(_Replica(temp, tree, evaluator.value(tree), rng))
    swap_rng = random.Random(derive_seed(cfg.seed, "swap", origin.key()))

    best_m = max(range(len(replicas)), key=lambda m: replicas[m].energy)
    best_tree = replicas[best_m].tree
    best_value = replicas[best_m].energy
    iteration_found = 0

    windows: List[WindowRecord] = []
    swap_probabilities: List[Tuple[float, ...]] = []
    converged = False
    iteration = 0
    workers = worker_count()
    window_index = 0
    while True:
        # basic level: every replica advances independently
        jobs = [(rep, evaluator, cfg.n_it, iteration, cfg.exchange_probability)
                for rep in replicas]
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                window_bests = list(pool.map(lambda a: _replica_window(*a), jobs))
        else:
            window_bests = [_replica_window(*job) for job in jobs]
        iteration += cfg.n_it

        # merge in (iteration, replica) order so scheduling cannot matter
        for _, (v, i, tree) in sorted(enumerate(window_bests),
                                      key=lambda pair: (pair[1][1], pair[0])):
            if v > best_value:
                best_value = v
                best_tree = tree
                iteration_found = i

        # advanced level: one swap attempt per neighbour pair, coldest first
        probs: List[float] = []
        accepts: List[bool] = []
        for m in range(len(replicas) - 1):
            a, b = replicas[m], replicas[m + 1]
            p = swap_accept_prob(a.energy / money.SCALE, b.energy / money.SCALE,
                                 a.temperature, b.temperature)
            take = swap_rng.random() < p
            if take:
                a.tree, b.tree = b.tree, a.tree
                a.energy, b.energy = b.energy, a.energy
            probs.append(p)
            accepts.append(take)

        check = replicas[window_index % len(replicas)]
        if check.energy != evaluate_rvt(check.tree, scenario).expected_value:
            raise AssertionError("replica energy cache diverged from its tree")

        windows.append(WindowRecord(
            iteration, best_value / money.SCALE,
            tuple(r.energy / money.SCALE for r in replicas), tuple(accepts)))
        swap_probabilities.append(tuple(probs))
        window_index += 1

        if iteration - iteration_found >= cfg.convergence_length:
            converged = True
            break
        if iteration >= cfg.max_iterations:
            break

    return PtResult(evaluator.evaluate(best_tree), best_value, iteration,
                    iteration_found, converged, ladder, windows, swap_probabilities)


# ---------------------------------------------------------------------------
# diagnostics


def _fmt_temp(t: float) -> str:
    return str(int(t)) if float(t).is_integer() else f"{t:g}"


def acceptance_log(result: PtResult, block: int = 20) -> dict:
    """Per-pair mean swap acceptance probability over fixed-size blocks."""
    temps = result.ladder.temps
    labels = [f"{_fmt_temp(a)}-{_fmt_temp(b)}" for a, b in zip(temps, temps[1:])]
    pairs = []
    for idx, label in enumerate(labels):
        column = [probs[idx] for probs in result.swap_probabilities]
        series = [math.fsum(column[i:i + block]) / len(column[i:i + block])
                  for i in range(0, len(column), block)]
        pairs.append({"pair": label, "series": series})
    return {"block": block, "pairs": pairs}


def result_to_dict(result: PtResult) -> dict:
    out = {
        "bestValue": result.best_value / money.SCALE,
        "iterations": result.iterations,
        "iterationFound": result.iteration_found,
        "converged": result.converged,
        "ladder": list(result.ladder.temps),
        "windows": [
            {
                "iter": w.iteration,
                "bestValue": w.best_value,
                "perReplicaEnergy": list(w.energies),
                "swapAccepts": list(w.swap_accepts),
            }
            for w in result.windows
        ],
    }
    if result.ladder.interval:
        out["deltaBetaInterval"] = list(result.ladder.interval)
    if result.ladder.warnings:
        out["ladderWarnings"] = list(result.ladder.warnings)
    return out
