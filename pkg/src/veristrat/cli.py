"""Batch entry points: generate networks, optimize, explore, compare, serve.

Every command honours --seed and writes deterministic artifacts: repeated
invocations with the same flags produce byte-identical files regardless of
the worker count (set only through the VERISTRAT_WORKERS environment
variable). Failures print one machine-readable JSON line on stderr and
exit 2 (bad configuration), 3 (infeasible request) or 4 (internal error).
"""
from __future__ import annotations

import csv
import functools
import io
import json
import sys
from pathlib import Path
from typing import Optional, Tuple

import click

from . import money
from .baselines import DEFAULT_FP_BUDGET, METHODS, compare, compare_rows
from .bayesnet import network_to_dict
from .errors import ConfigError, InfeasibleError
from .explorer import build_hvt, convergence_sweep, pt_optimizer, value_plot_data
from .netgen import exemplar_network, random_network, satellite_network
from .ptengine import PtConfig, acceptance_log, result_to_dict, run
from .scenario import (
    BUNDLED,
    Scenario,
    StateError,
    VerificationState,
    bundled_scenario,
    load_scenario,
)
from .treespace import TreeError, fvt_to_dict, fvt_to_dot, hvt_to_dict, hvt_to_dot


def _fail(exit_code: int, code: str, message: str) -> None:
    sys.stderr.write(json.dumps({"code": code, "message": message}) + "\n")
    sys.exit(exit_code)


def engine_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except InfeasibleError as err:
            _fail(3, "infeasible", str(err))
        except (ConfigError, StateError, TreeError) as err:
            _fail(2, "config_error", str(err))
        except click.ClickException:
            raise
        except Exception as err:
            _fail(4, "internal_error", f"{type(err).__name__}: {err}")

    return wrapper


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _json_text(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def scenario_options(fn):
    opts = [
        click.option("--network", "network_file", default=None,
                     type=click.Path(exists=True, dir_okay=False),
                     help="Network JSON file (needs --costs)."),
        click.option("--costs", "cost_file", default=None,
                     type=click.Path(exists=True, dir_okay=False),
                     help="Cost JSON file (needs --network)."),
        click.option("--preset", type=click.Choice(sorted(BUNDLED)), default=None,
                     help="Bundled scenario; the default when no files are given."),
        click.option("--scope", default=None,
                     help="Named activity scope stored in the network."),
        click.option("--rule", default="Low", show_default=True,
                     help="Rework rule name from the rule table."),
        click.option("--horizon", type=int, default=5, show_default=True),
        click.option("--deployment-threshold", type=float, default=0.95,
                     show_default=True),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def build_scenario(network_file, cost_file, preset, scope, rule, horizon,
                   deployment_threshold) -> Scenario:
    if network_file or cost_file:
        if not (network_file and cost_file):
            raise ConfigError("provide both --network and --costs")
        if preset:
            raise ConfigError("--preset conflicts with --network/--costs")
        return load_scenario(network_file, cost_file, rule=rule, horizon=horizon,
                             scope=scope, deployment_threshold=deployment_threshold)
    return bundled_scenario(preset or "exemplar", rule=rule, horizon=horizon,
                            scope=scope, deployment_threshold=deployment_threshold)


def search_options(fn):
    opts = [
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--nit", type=int, default=50, show_default=True,
                     help="Iterations per convergence window."),
        click.option("--L", "convergence_length", type=int, default=1000,
                     show_default=True,
                     help="Stall length, a multiple of --nit."),
        click.option("--replicas", type=int, default=None,
                     help="Ladder size when generating temperatures."),
        click.option("--ladder", default=None,
                     help="Explicit comma-separated temperatures."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def build_cfg(seed, nit, convergence_length, replicas, ladder) -> PtConfig:
    parsed: Optional[Tuple[float, ...]] = None
    if ladder:
        try:
            parsed = tuple(float(x) for x in ladder.split(","))
        except ValueError:
            raise ConfigError(f"unparseable ladder {ladder!r}") from None
    return PtConfig(seed=seed, n_it=nit, convergence_length=convergence_length,
                    replicas=replicas, ladder=parsed)


def parse_state(scenario: Scenario, state: Optional[str], t: int) -> VerificationState:
    if state is None:
        origin = scenario.initial_state()
        if t:
            raise ConfigError("--t needs --state")
        return origin
    try:
        results = tuple(int(x) for x in state.split(","))
    except ValueError:
        raise ConfigError(f"unparseable state {state!r}") from None
    try:
        return VerificationState(scenario.scope, results, t)
    except StateError as err:
        raise ConfigError(str(err)) from None


@click.group()
def main():
    """Design dynamic verification strategies for engineered systems."""


@main.command("gen-network")
@click.option("--preset", type=click.Choice(["exemplar", "satellite"]), default=None,
              help="Emit a bundled topology instead of a random one.")
@click.option("--parameters", type=int, default=3, show_default=True)
@click.option("--activities", type=int, default=4, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Output file; stdout when omitted.")
@engine_errors
def gen_network(preset, parameters, activities, seed, out):
    """Write a Noisy-OR network as JSON."""
    if preset == "exemplar":
        net = exemplar_network()
    elif preset == "satellite":
        net = satellite_network()
    else:
        net = random_network(n_parameters=parameters, n_activities=activities,
                             seed=seed)
    text = _json_text(network_to_dict(net))
    if out:
        _write(Path(out), text)
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)


@main.command()
@scenario_options
@search_options
@click.option("--state", default=None,
              help="Comma-separated result vector (-1, 0, 1) to optimize from.")
@click.option("--t", type=int, default=0, show_default=True,
              help="Elapsed intervals for --state.")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None,
              help="Artifact directory; summary only when omitted.")
@engine_errors
def fvt(network_file, cost_file, preset, scope, rule, horizon,
        deployment_threshold, seed, nit, convergence_length, replicas, ladder,
        state, t, out_dir):
    """Optimize one strategy tree from a given state."""
    scenario = build_scenario(network_file, cost_file, preset, scope, rule,
                              horizon, deployment_threshold)
    cfg = build_cfg(seed, nit, convergence_length, replicas, ladder)
    origin = parse_state(scenario, state, t)
    result = run(origin, scenario, cfg)
    if out_dir:
        base = Path(out_dir)
        _write(base / "fvt.json", _json_text(fvt_to_dict(result.best)))
        _write(base / "fvt.dot", fvt_to_dot(result.best))
        report = result_to_dict(result)
        report["swapAcceptance"] = acceptance_log(result)
        _write(base / "run.json", _json_text(report))
    click.echo(f"expected value {result.best_value / money.SCALE:.3f} "
               f"after {result.iterations} iterations "
               f"({'converged' if result.converged else 'iteration cap'})")


@main.command()
@scenario_options
@search_options
@click.option("--out-dir", type=click.Path(file_okay=False), default=None)
@engine_errors
def explore(network_file, cost_file, preset, scope, rule, horizon,
            deployment_threshold, seed, nit, convergence_length, replicas,
            ladder, out_dir):
    """Re-optimize at every reachable state and emit the hindsight tree."""
    scenario = build_scenario(network_file, cost_file, preset, scope, rule,
                              horizon, deployment_threshold)
    cfg = build_cfg(seed, nit, convergence_length, replicas, ladder)
    hvt = build_hvt(scenario, cfg, optimizer=pt_optimizer)
    plot = value_plot_data(hvt, scenario)
    if out_dir:
        base = Path(out_dir)
        _write(base / "hvt.json", _json_text(hvt_to_dict(hvt)))
        _write(base / "hvt.dot", hvt_to_dot(hvt))
        rows = [
            (s["path"], time, s["values"][time], s["probability"], s["tag"])
            for s in plot["series"]
            for time in range(plot["horizon"] + 1)
        ]
        _write(base / "value_plot.csv",
               _csv_text(("path", "t", "value", "probability", "tag"), rows))
    click.echo(f"expected value {hvt.expected_value / money.SCALE:.3f} "
               f"across {len(hvt.states)} states, "
               f"{len(plot['series'])} outcome paths")


@main.command("compare")
@scenario_options
@search_options
@click.option("--methods", default="PTA,FP,MC,DMC,SFVT", show_default=True,
              help="Comma-separated method names to run.")
@click.option("--fp-budget", type=int, default=DEFAULT_FP_BUDGET,
              show_default=True, help="Fixed-path enumeration cap.")
@click.option("--timing/--no-timing", default=False, show_default=True,
              help="Keep wall-clock columns (breaks byte determinism).")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None)
@engine_errors
def compare_cmd(network_file, cost_file, preset, scope, rule, horizon,
                deployment_threshold, seed, nit, convergence_length, replicas,
                ladder, methods, fp_budget, timing, out_dir):
    """Price strategies found by every requested method on one scenario."""
    scenario = build_scenario(network_file, cost_file, preset, scope, rule,
                              horizon, deployment_threshold)
    cfg = build_cfg(seed, nit, convergence_length, replicas, ladder)
    wanted = tuple(m.strip() for m in methods.split(",") if m.strip())
    if not wanted:
        raise ConfigError("no methods requested")
    unknown = [m for m in wanted if m.upper() not in METHODS]
    if unknown:
        raise ConfigError(f"unknown method {unknown[0]!r} "
                          f"(have: {', '.join(METHODS)})")
    results = compare(scenario, cfg, methods=wanted, fp_budget=fp_budget)
    rows = compare_rows(results, rule=rule, scope=scope or "default",
                        timing=timing)
    if out_dir:
        _write(Path(out_dir) / "compare.csv", _csv_text(
            ("method", "reworkRule", "scope", "expectedValue", "wallTimeSeconds"),
            [(r["method"], r["reworkRule"], r["scope"], r["expectedValue"],
              r["wallTimeSeconds"]) for r in rows]))
    for row in rows:
        click.echo(f"{row['method']:5s} {row['expectedValue']:.3f}")


@main.command()
@scenario_options
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--nit", type=int, default=50, show_default=True)
@click.option("--replicas", type=int, default=None)
@click.option("--ladder", default=None)
@click.option("--l-min", type=int, default=50, show_default=True)
@click.option("--l-max", type=int, default=1000, show_default=True)
@click.option("--l-step", type=int, default=50, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), default=None)
@engine_errors
def sweep(network_file, cost_file, preset, scope, rule, horizon,
          deployment_threshold, seed, nit, replicas, ladder, l_min, l_max,
          l_step, out_dir):
    """Sweep the stall length and report where the found value settles."""
    scenario = build_scenario(network_file, cost_file, preset, scope, rule,
                              horizon, deployment_threshold)
    if l_min < 1 or l_step < 1 or l_max < l_min:
        raise ConfigError("sweep grid must be positive and increasing")
    lengths = list(range(l_min, l_max + 1, l_step))
    cfg = build_cfg(seed, nit, lengths[0], replicas, ladder)
    bad = [length for length in lengths if length % cfg.n_it]
    if bad:
        raise ConfigError(f"grid length {bad[0]} is not a multiple of --nit")
    out = convergence_sweep(scenario, cfg, lengths)
    if out_dir:
        base = Path(out_dir)
        _write(base / "sweep.json", _json_text(out))
        _write(base / "sweep.csv", _csv_text(
            ("L", "value", "iterations"),
            list(zip(out["lengths"], out["values"], out["iterations"]))))
    click.echo(f"plateau at L={out['plateau']} "
               f"value {out['values'][-1]:.3f}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8660, show_default=True)
@click.option("--sessions-dir", type=click.Path(file_okay=False),
              default="veristrat-sessions", show_default=True,
              help="Event-log directory; replayed on startup.")
@engine_errors
def serve(host, port, sessions_dir):
    """Run the HTTP session service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(Path(sessions_dir)), host=host, port=port)


if __name__ == "__main__":
    main()
