"""End-to-end acceptance gate.

Each test checks one headline guarantee of the package at its stated
tolerance and prints a single PASS/FAIL line (visible with -s). Several use
independent oracles from tests/oracles.py rather than library code.
"""

import json
import math
import random
import sys
import time
from pathlib import Path

import pytest
from click.testing import CliRunner

from veristrat.baselines import compare, pta
from veristrat.cli import main as cli_main
from veristrat.explorer import build_hvt, convergence_sweep, exhaustive_optimizer
from veristrat.netgen import random_network
from veristrat.bayesnet import posterior
from veristrat.ptengine import PtConfig, build_ladder, delta_beta_interval, run, swap_accept_prob
from veristrat.sampler import propose, random_tree
from veristrat.scenario import bundled_scenario
from veristrat.treespace import TreeEvaluator, hvt_leaf_path_count, validate_tree

from conftest import tiny_scenario
from oracles import (
    backward_induction,
    best_tree_by_enumeration,
    expected_value_of_labels,
    joint_posterior,
    rollout_mean,
)

AGG_CFG = lambda seed: PtConfig(seed=seed, n_it=25, convergence_length=250)
DESK_MIX = [(3, 2), (4, 2), (4, 3), (5, 2), (3, 3)]


def note(ok: bool, label: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'}: {label}")
    assert ok, label


@pytest.fixture(scope="module")
def desk_scenarios():
    """Twenty exhaustively enumerable scenarios with a nontrivial optimum."""
    picked = []
    seed = 0
    while len(picked) < 20:
        n_act, horizon = DESK_MIX[seed % len(DESK_MIX)]
        scenario = tiny_scenario(seed, n_act, horizon)
        optimum, _ = best_tree_by_enumeration(scenario.initial_state(), scenario)
        if optimum > 0:
            picked.append((seed, scenario, optimum))
        seed += 1
    return picked


def test_inference_matches_joint_enumeration():
    started = time.perf_counter()
    worst = 0.0
    for i in range(50):
        rng = random.Random(f"acc1:{i}")
        n_par = rng.randint(2, 6)
        n_act = rng.randint(2, 16 - n_par)
        net = random_network(n_parameters=n_par, n_activities=n_act, seed=i)
        activities = list(net.activity_scope)
        for _ in range(3):
            drawn = rng.sample(activities, rng.randint(0, len(activities)))
            evidence = {name: rng.random() < 0.5 for name in drawn}
            for target in net.targets:
                got = posterior(net, evidence, target)
                want = joint_posterior(net, evidence, target)
                worst = max(worst, abs(got - want))
    elapsed = time.perf_counter() - started
    note(worst <= 1e-10 and elapsed < 10.0,
         f"posterior vs full joint on 50 networks: worst |delta| {worst:.2e}, "
         f"{elapsed:.2f}s")


def test_tree_value_matches_outcome_enumeration_and_rollouts():
    exact_ok = True
    for seed in range(10):
        scenario = tiny_scenario(seed, n_activities=4, horizon=3)
        origin = scenario.initial_state()
        evaluator = TreeEvaluator(scenario)
        tree = random_tree(origin, 3, random.Random(f"eq4:{seed}"))
        exact_ok &= evaluator.value(tree) == expected_value_of_labels(
            tree.labels, origin, scenario)

    scenario = bundled_scenario("exemplar")
    origin = scenario.initial_state()
    evaluator = TreeEvaluator(scenario)
    worst_z = 0.0
    rng = random.Random("eq4mc")
    trees = []
    while len(trees) < 3:
        tree = random_tree(origin, 5, rng)
        # demand branching so the rollout distribution is not a constant
        if sum(1 for lab in tree.labels if lab is not None) >= 8:
            trees.append(tree)
    for seed, tree in enumerate(trees):
        mean, stderr = rollout_mean(tree.labels, origin, scenario, 100_000,
                                    random.Random(seed))
        z = abs(mean - evaluator.value(tree)) / stderr
        worst_z = max(worst_z, z)
    note(exact_ok and worst_z <= 3.0,
         f"tree value: exact on 10 depth-3 trees, Monte Carlo worst z "
         f"{worst_z:.2f} at 1e5 rollouts on depth-5 trees")


def _sig2(x: float) -> float:
    return round(x, -int(math.floor(math.log10(abs(x)))) + 1)


def test_ladder_design_interval():
    cfg = PtConfig()
    assert (cfg.c1, cfg.c2) == (0.05, 0.05)
    assert (cfg.delta_e_max, cfg.delta_e_thres) == (380_000.0, 100.0)
    low, high = delta_beta_interval(cfg)
    ladder = build_ladder(cfg)
    within = all(low <= db <= high for db in ladder.pair_delta_betas())
    note((_sig2(low), _sig2(high)) == (0.79e-5, 0.03)
         and within and not ladder.warnings,
         f"delta-beta interval [{low:.3g}, {high:.3g}] rounds to "
         f"[0.79e-5, 0.03]; generated ladder stays inside it")


def test_sampler_moves_stay_valid():
    scenario = bundled_scenario("satellite", scope="medium")
    origin = scenario.initial_state()
    assert len(origin.scope) == 10 and scenario.horizon == 5
    rng = random.Random("moves")
    tree = random_tree(origin, 5, rng)
    validate_tree(tree)
    for _ in range(10_000):
        tree = propose(tree, rng)
        validate_tree(tree)
    note(True, "10000 chained exchange/replacement moves on depth-5 trees "
               "over 10 activities: all valid, all terminated")


def test_swap_acceptance_rule():
    equal_energy = swap_accept_prob(500.0, 500.0, 10.0, 20.0)
    canonical = swap_accept_prob(100.0, 0.0, 10.0, 20.0)
    rng = random.Random("swap")
    uphill = all(
        swap_accept_prob(e_hi - gap, e_hi, t, t * 2) == 1.0
        for e_hi, gap, t in ((rng.uniform(-1e5, 1e5), rng.uniform(0, 1e5),
                              rng.uniform(1, 1e4)) for _ in range(1000)))
    note(equal_energy == 1.0
         and abs(canonical - math.exp(-5.0)) <= 1e-12
         and uphill,
         "swap rule: equal energies accept at 1, temps (10,20) with gap 100 "
         "give exp(-5) within 1e-12, better value in the hotter replica "
         "always swaps")


def test_search_attains_enumeration_optimum_at_desk_scale(desk_scenarios):
    hits = 0
    slowest = 0.0
    for seed, scenario, optimum in desk_scenarios:
        started = time.perf_counter()
        result = run(scenario.initial_state(), scenario,
                     PtConfig(seed=seed, convergence_length=1000))
        slowest = max(slowest, time.perf_counter() - started)
        hits += result.best_value == optimum
    note(hits >= 19 and slowest < 60.0,
         f"tempered search at L=1000 hit the enumeration optimum on "
         f"{hits}/20 small scenarios, slowest run {slowest:.1f}s")


def test_hindsight_tree_matches_backward_induction(desk_scenarios):
    checked = 0
    for seed, scenario, _ in desk_scenarios:
        hvt = build_hvt(scenario, PtConfig(seed=seed),
                        optimizer=exhaustive_optimizer)
        oracle = backward_induction(scenario)
        assert hvt.expected_value == pytest.approx(
            oracle[scenario.initial_state().key()][1], rel=1e-9, abs=1e-6)
        for key, node in hvt.states.items():
            if node.kind == "decision":
                assert oracle[key][0] == node.action, (seed, key)
                assert node.fvt_value == pytest.approx(
                    oracle[key][1], rel=1e-9, abs=1e-6), (seed, key)
                checked += 1
            elif node.kind == "unrecoverable":
                assert oracle[key][0] is None, (seed, key)
    note(True, f"exhaustive hindsight trees equal backward induction on all "
               f"20 scenarios ({checked} decision states)")


@pytest.fixture(scope="module")
def rule_means():
    methods = ("PTA", "SFVT", "MC", "DMC")
    means = {}
    for rule in ("Low", "Low-high", "High-low", "High"):
        scenario = bundled_scenario("satellite", rule=rule, scope="medium")
        totals = dict.fromkeys(methods, 0.0)
        for seed in range(20):
            for res in compare(scenario, AGG_CFG(seed), methods=methods):
                totals[res.method] += res.expected_value
        means[rule] = {m: totals[m] / 20 / 1000.0 for m in methods}
    return means


def test_method_ordering_in_aggregate_mean(rule_means):
    ok = True
    lines = []
    for rule, m in rule_means.items():
        ok &= m["PTA"] >= m["SFVT"] >= m["MC"] and m["PTA"] >= m["DMC"]
        lines.append(f"{rule}: PTA {m['PTA']:.1f} SFVT {m['SFVT']:.1f} "
                     f"MC {m['MC']:.1f} DMC {m['DMC']:.1f}")
    note(ok, "mean over 20 seeds keeps PTA >= SFVT >= MC and PTA >= DMC on "
             "every rework rule (" + "; ".join(lines) + ")")


def test_high_rule_narrows_the_path_tradespace():
    counts = {}
    for rule in ("High", "Low"):
        scenario = bundled_scenario("satellite", rule=rule, scope="medium")
        counts[rule] = hvt_leaf_path_count(pta(scenario, AGG_CFG(0)).hvt)
    note(counts["High"] <= counts["Low"],
         f"hindsight leaf paths: {counts['High']} under High <= "
         f"{counts['Low']} under Low")


def test_cli_artifacts_are_deterministic(tmp_path):
    fast = ["--nit", "5", "--L", "20", "--replicas", "3", "--seed", "3"]
    jobs = {
        "net": ["gen-network", "--parameters", "4", "--activities", "6",
                "--seed", "9", "--out", "OUT/net.json"],
        "fvt": ["fvt", *fast, "--out-dir", "OUT"],
        "explore": ["explore", "--nit", "5", "--L", "10", "--replicas", "3",
                    "--seed", "3", "--horizon", "3", "--out-dir", "OUT"],
        "compare": ["compare", *fast, "--methods", "PTA,MC,SFVT",
                    "--out-dir", "OUT"],
        "sweep": ["sweep", "--nit", "5", "--replicas", "3", "--seed", "3",
                  "--l-min", "10", "--l-max", "30", "--l-step", "10",
                  "--out-dir", "OUT"],
    }
    runner = CliRunner()
    snapshots = []
    for tag, env in (("a", None), ("b", None), ("c", {"VERISTRAT_WORKERS": "4"})):
        root = tmp_path / tag
        snapshot = {}
        for name, args in jobs.items():
            out = root / name
            patched = [a.replace("OUT", str(out)) for a in args]
            result = runner.invoke(cli_main, patched, env=env,
                                   catch_exceptions=False)
            assert result.exit_code == 0, (name, result.output, result.stderr)
            for artifact in sorted(out.rglob("*")):
                snapshot[f"{name}/{artifact.name}"] = artifact.read_bytes()
        snapshots.append(snapshot)
    identical = snapshots[0] == snapshots[1] == snapshots[2]
    note(identical and len(snapshots[0]) == 10,
         f"{len(snapshots[0])} artifacts from 5 commands byte-identical "
         f"across reruns and a 4-worker environment")


def test_stall_length_sweep_completes_with_plateau():
    scenario = bundled_scenario("satellite", scope="medium")
    lengths = list(range(50, 1001, 50))
    started = time.perf_counter()
    out = convergence_sweep(
        scenario, PtConfig(seed=0, n_it=50, convergence_length=50), lengths)
    elapsed = time.perf_counter() - started
    note(out["lengths"] == lengths and out["plateau"] in lengths
         and len(out["values"]) == len(lengths) and elapsed < 1800.0,
         f"stall-length sweep 50..1000 finished in {elapsed:.0f}s with a "
         f"plateau at L={out['plateau']}")
