"""HTTP session service for operating live verification campaigns.

A session tracks one campaign: the current verification state, the event
history, and the latest next-activity recommendation. Recommendations are
computed by the tempered search in a background thread per session and
exposed through a status field that clients poll. Every mutation appends
to a JSONL event log; restarting the service replays the logs, so the
derived numbers (posteriors, costs, recommendations) are reproduced by
the engine rather than trusted from disk. No valuation logic lives here.
"""
from __future__ import annotations

import json
import threading
import uuid
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from fastapi import Body, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import money
from .errors import ConfigError
from .ptengine import PtConfig, run
from .scenario import (
    BUNDLED,
    Scenario,
    apply_result,
    apply_rework,
    bundled_network,
    bundled_scenario,
    load_rules,
    rework_cost,
)
from .treespace import ForesightTree, fvt_to_dict

DEFAULT_RULE = "Low"
DEFAULT_HORIZON = 5
DEFAULT_DEPLOYMENT_THRESHOLD = 0.95

_CONFIG_FIELDS = {
    "nIt": "n_it",
    "convergenceLength": "convergence_length",
    "maxIterations": "max_iterations",
    "c1": "c1",
    "c2": "c2",
    "c3": "c3",
    "deltaEThres": "delta_e_thres",
    "deltaEMax": "delta_e_max",
    "exchangeProbability": "exchange_probability",
    "ladder": "ladder",
    "replicas": "replicas",
}


class ServiceError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _bad(message: str) -> ServiceError:
    return ServiceError(400, "bad_request", message)


def build_config(config: Optional[dict], seed: int) -> PtConfig:
    kwargs = {"seed": seed}
    for key, value in (config or {}).items():
        field = _CONFIG_FIELDS.get(key)
        if field is None:
            raise _bad(f"unknown config field {key!r} "
                       f"(have: {', '.join(sorted(_CONFIG_FIELDS))})")
        if field == "ladder" and value is not None:
            value = tuple(float(x) for x in value)
        kwargs[field] = value
    try:
        return PtConfig(**kwargs)
    except ConfigError as err:
        raise ServiceError(400, "config_error", str(err)) from None


def normalize_scenario_ref(ref) -> dict:
    if isinstance(ref, str):
        ref = {"name": ref}
    if not isinstance(ref, dict) or "name" not in ref:
        raise _bad("scenario must be a preset name or an object with a name")
    known = {"name", "rule", "horizon", "scope", "deploymentThreshold"}
    unknown = set(ref) - known
    if unknown:
        raise _bad(f"unknown scenario field {sorted(unknown)[0]!r}")
    return {
        "name": ref["name"],
        "rule": ref.get("rule", DEFAULT_RULE),
        "horizon": int(ref.get("horizon", DEFAULT_HORIZON)),
        "scope": ref.get("scope"),
        "deploymentThreshold": float(
            ref.get("deploymentThreshold", DEFAULT_DEPLOYMENT_THRESHOLD)),
    }


def load_ref(ref: dict) -> Scenario:
    try:
        return bundled_scenario(
            ref["name"],
            rule=ref["rule"],
            horizon=ref["horizon"],
            scope=ref["scope"],
            deployment_threshold=ref["deploymentThreshold"],
        )
    except ConfigError as err:
        raise ServiceError(404, "unknown_scenario", str(err)) from None


class Session:
    """One campaign: engine state plus the log that reproduces it."""

    def __init__(self, sid: str, ref: dict, seed: int, config: Optional[dict],
                 log_path: Optional[Path]):
        self.id = sid
        self.ref = ref
        self.seed = seed
        self.config_echo = dict(config or {})
        self.scenario = load_ref(ref)
        self.cfg = build_config(config, seed)
        self.lock = threading.Lock()
        self.log_path = log_path
        self.state = self.scenario.initial_state()
        self.history: List[dict] = []
        self.spent: int = 0
        self.status = "active"
        self.generation = 0
        self.rec_status = "computing"
        self.rec_fvt: Optional[ForesightTree] = None
        self.rec_error: Optional[str] = None
        self._refresh_terminal()

    # -- state transitions ------------------------------------------------

    def _refresh_terminal(self) -> None:
        p = self.scenario.posterior(self.state)
        if p >= self.scenario.deployment_threshold:
            self.status = "deployed"
        elif self.state.time >= self.scenario.horizon:
            self.status = "horizon_end"
        if self.status != "active":
            self.rec_status = "ready"
            self.rec_fvt = None

    def apply_result_event(self, activity: str, result: bool, override: bool) -> dict:
        t = self.state.time
        scenario = self.scenario
        cost = scenario.activity_cost(activity)
        after = apply_result(self.state, activity, result)
        posterior = scenario.posterior(after)
        event = {
            "event": "result",
            "activity": activity,
            "result": result,
            "override": override,
            "time": t,
            "cost": money.to_display(cost),
            "posterior": posterior,
            "rework": False,
        }
        self.spent += cost
        if not result and posterior < scenario.lower_thresholds[t]:
            rw = rework_cost(scenario.costs, activity, t)
            after = apply_rework(after, activity)
            self.spent += rw
            event["rework"] = True
            event["reworkCost"] = money.to_display(rw)
            event["posteriorAfterRework"] = scenario.posterior(after)
        self.state = after
        self.history.append(event)
        self._refresh_terminal()
        return event

    def apply_stop_event(self) -> dict:
        event = {"event": "stopped", "time": self.state.time}
        self.status = "stopped"
        self.rec_status = "ready"
        self.rec_fvt = None
        self.history.append(event)
        return event

    # -- views -------------------------------------------------------------

    def recommendation_view(self) -> dict:
        if self.status != "active":
            return {"status": "ready", "action": None, "terminal": self.status}
        if self.rec_status == "failed":
            raise ServiceError(500, "internal_error",
                               self.rec_error or "recommendation failed")
        if self.rec_status != "ready":
            return {"status": "computing"}
        fvt = self.rec_fvt
        action = fvt.root.activity if fvt.root.kind == "activity" else None
        return {
            "status": "ready",
            "action": action,
            "fvtExpectedValue": fvt.expected_value / money.SCALE,
            "posterior": self.scenario.posterior(self.state),
        }

    def tree_view(self) -> dict:
        if self.status != "active":
            return {"status": "ready", "terminal": self.status, "tree": None}
        if self.rec_status == "failed":
            raise ServiceError(500, "internal_error",
                               self.rec_error or "recommendation failed")
        if self.rec_status != "ready":
            return {"status": "computing"}
        return {"status": "ready", "tree": fvt_to_dict(self.rec_fvt)}

    def view(self) -> dict:
        scenario = self.scenario
        return {
            "id": self.id,
            "scenario": {
                **self.ref,
                "activities": list(scenario.scope),
                "lowerThresholds": list(scenario.lower_thresholds),
                "target": scenario.network.targets[0],
            },
            "status": self.status,
            "time": self.state.time,
            "horizon": scenario.horizon,
            "posterior": scenario.posterior(self.state),
            "results": dict(zip(scenario.scope, self.state.results)),
            "spent": money.to_display(self.spent),
            "history": list(self.history),
            "recommendation": self.recommendation_view(),
            "seed": self.seed,
            "config": dict(self.config_echo),
        }


class Registry:
    """Session store with JSONL persistence and one job thread per session."""

    def __init__(self, log_dir: Optional[Path] = None):
        self.log_dir = Path(log_dir) if log_dir else None
        self.sessions: Dict[str, Session] = {}
        self.lock = threading.Lock()
        if self.log_dir:
            self.log_dir.mkdir(parents=True, exist_ok=True)
            self._replay_all()

    # -- persistence -------------------------------------------------------

    def _append(self, session: Session, event: dict) -> None:
        if session.log_path is None:
            return
        with session.log_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    def _replay_all(self) -> None:
        for path in sorted(self.log_dir.glob("*.jsonl")):
            session = self._replay(path)
            if session is not None:
                self.sessions[session.id] = session
                if session.status == "active":
                    self._launch(session)

    def _replay(self, path: Path) -> Optional[Session]:
        lines = [json.loads(line) for line in
                 path.read_text("utf-8").splitlines() if line.strip()]
        if not lines or lines[0].get("event") != "created":
            return None
        head = lines[0]
        session = Session(head["id"], head["scenario"], head["seed"],
                          head.get("config"), path)
        for event in lines[1:]:
            if event["event"] == "result":
                session.apply_result_event(
                    event["activity"], event["result"], event.get("override", False))
            elif event["event"] == "stopped":
                session.apply_stop_event()
        return session

    # -- lifecycle ---------------------------------------------------------

    def create(self, ref, config: Optional[dict], seed: int) -> Session:
        ref = normalize_scenario_ref(ref)
        sid = uuid.uuid4().hex[:12]
        log_path = self.log_dir / f"{sid}.jsonl" if self.log_dir else None
        session = Session(sid, ref, seed, config, log_path)
        with self.lock:
            self.sessions[sid] = session
        self._append(session, {"event": "created", "id": sid, "scenario": ref,
                               "seed": seed, "config": session.config_echo})
        if session.status == "active":
            self._launch(session)
        return session

    def get(self, sid: str) -> Session:
        session = self.sessions.get(sid)
        if session is None:
            raise ServiceError(404, "unknown_session", f"no session {sid!r}")
        return session

    def _launch(self, session: Session) -> None:
        session.generation += 1
        session.rec_status = "computing"
        session.rec_fvt = None
        generation = session.generation
        state, scenario, cfg = session.state, session.scenario, session.cfg

        def job():
            try:
                fvt = run(state, scenario, cfg).best
            except Exception as err:  # surfaced to clients as internal_error
                with session.lock:
                    if session.generation == generation:
                        session.rec_status = "failed"
                        session.rec_error = str(err)
                return
            with session.lock:
                # a superseding result makes this run stale; drop it
                if session.generation == generation and session.status == "active":
                    session.rec_fvt = fvt
                    session.rec_status = "ready"

        threading.Thread(target=job, daemon=True,
                         name=f"recommend-{session.id}-{generation}").start()

    def submit(self, session: Session, payload: dict) -> dict:
        allowed = {"activity", "result", "override"}
        unknown = set(payload) - allowed
        if unknown:
            raise _bad(f"unknown field {sorted(unknown)[0]!r}")
        activity = payload.get("activity")
        override = bool(payload.get("override", False))
        with session.lock:
            if session.status != "active":
                raise ServiceError(409, "terminal_session",
                                   f"session is {session.status}")
            ready = session.rec_status == "ready"
            recommended = (session.rec_fvt.root.activity
                           if ready and session.rec_fvt is not None
                           and session.rec_fvt.root.kind == "activity" else None)
            if not override:
                if not ready:
                    raise ServiceError(409, "recommendation_pending",
                                       "recommendation is still computing; "
                                       "set override to act anyway")
                if activity != recommended:
                    raise ServiceError(409, "not_recommended",
                                       f"recommended activity is {recommended!r}; "
                                       "set override to deviate")
            if activity is None:
                event = session.apply_stop_event()
                self._append(session, event)
                return session.view()
            if activity not in session.scenario.scope:
                raise _bad(f"activity {activity!r} not in scope")
            if session.state.result_for(activity) != 0:
                raise ServiceError(409, "already_verified",
                                   f"activity {activity!r} already has a result")
            result = payload.get("result")
            if not isinstance(result, bool):
                raise _bad("result must be true or false")
            event = session.apply_result_event(activity, result, override)
            self._append(session, event)
            if session.status == "active":
                self._launch(session)
            return session.view()


def scenarios_view() -> dict:
    presets = []
    for name in sorted(BUNDLED):
        network = bundled_network(name)
        presets.append({
            "name": name,
            "activities": list(network.activity_scope),
            "scopes": list(network.scopes),
        })
    return {
        "scenarios": presets,
        "rules": {name: list(values) for name, values in load_rules().items()},
        "defaults": {
            "rule": DEFAULT_RULE,
            "horizon": DEFAULT_HORIZON,
            "deploymentThreshold": DEFAULT_DEPLOYMENT_THRESHOLD,
            "seed": 0,
        },
    }


def create_app(log_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="verification strategy service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"])
    registry = Registry(log_dir)
    app.state.registry = registry

    @app.exception_handler(ServiceError)
    async def service_error(request: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"code": "bad_request", "message": str(exc)})

    @app.get("/scenarios")
    def list_scenarios():
        return scenarios_view()

    @app.post("/sessions", status_code=201)
    def create_session(payload: dict = Body(...)):
        allowed = {"scenario", "config", "seed"}
        unknown = set(payload) - allowed
        if unknown:
            raise _bad(f"unknown field {sorted(unknown)[0]!r}")
        if "scenario" not in payload:
            raise _bad("scenario is required")
        seed = payload.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise _bad("seed must be an integer")
        config = payload.get("config")
        if config is not None and not isinstance(config, dict):
            raise _bad("config must be an object")
        session = registry.create(payload["scenario"], config, seed)
        with session.lock:
            return session.view()

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        session = registry.get(sid)
        with session.lock:
            return session.view()

    @app.post("/sessions/{sid}/results")
    def post_result(sid: str, payload: dict = Body(...)):
        return registry.submit(registry.get(sid), payload)

    @app.get("/sessions/{sid}/recommendation")
    def get_recommendation(sid: str):
        session = registry.get(sid)
        with session.lock:
            return session.recommendation_view()

    @app.get("/sessions/{sid}/tree")
    def get_tree(sid: str):
        session = registry.get(sid)
        with session.lock:
            return session.tree_view()

    return app
