"""Binary Bayesian networks over system parameters and verification activities.

Nodes are boolean. Each node carries either an explicit conditional table or
a Noisy-OR gate

    P(node = true | parents) = 1 - (1 - leak) * prod_{j : parent_j true} (1 - w_j)

Inference is exact: barren leaves (non-ancestors of query and evidence) are
pruned, the remaining factors go through variable elimination with a greedy
min-width ordering, and results are memoised per network. Queries conditioned
on impossible evidence raise instead of returning garbage.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

PARAMETER = "system_parameter"
ACTIVITY = "verification_activity"
_KINDS = (PARAMETER, ACTIVITY)

Evidence = Mapping[str, bool]


class NetworkError(ValueError):
    """Structural problem in a network definition."""


class MalformedAssignmentError(ValueError):
    """Parent assignment does not match a node's parent set."""


class ImpossibleEvidenceError(ValueError):
    """Evidence has probability zero under the network."""


@dataclass(frozen=True)
class NoisyOr:
    leak: float
    weights: Tuple[float, ...]


@dataclass(frozen=True)
class ExplicitTable:
    # keys are parent bitstrings in parent order, "" for root nodes
    rows: Mapping[str, float]


Cpt = Union[NoisyOr, ExplicitTable]


@dataclass(frozen=True)
class BayesNode:
    id: str
    kind: str
    parents: Tuple[str, ...]
    cpt: Cpt


def cpt_prob(node: BayesNode, assignment: Mapping[str, bool]) -> float:
    """P(node = true) under a full assignment of the node's parents."""
    try:
        bits = [bool(assignment[p]) for p in node.parents]
    except KeyError as missing:
        raise MalformedAssignmentError(
            f"node {node.id!r}: assignment missing parent {missing.args[0]!r}"
        ) from None
    if isinstance(node.cpt, NoisyOr):
        fail = 1.0 - node.cpt.leak
        for bit, w in zip(bits, node.cpt.weights):
            if bit:
                fail *= 1.0 - w
        return 1.0 - fail
    key = "".join("1" if b else "0" for b in bits)
    return node.cpt.rows[key]


class BayesNetwork:
    """Validated DAG with named parameter targets and a selectable activity scope."""

    def __init__(
        self,
        nodes: Sequence[BayesNode],
        targets: Sequence[str],
        activity_scope: Sequence[str],
        scopes: Optional[Mapping[str, Sequence[str]]] = None,
    ):
        self.nodes: Dict[str, BayesNode] = {}
        for node in nodes:
            if node.id in self.nodes:
                raise NetworkError(f"duplicate node id {node.id!r}")
            if node.kind not in _KINDS:
                raise NetworkError(f"node {node.id!r}: unknown kind {node.kind!r}")
            self.nodes[node.id] = node
        for node in nodes:
            for p in node.parents:
                if p not in self.nodes:
                    raise NetworkError(f"node {node.id!r}: unknown parent {p!r}")
        self.order = self._toposort()
        self._index = {nid: i for i, nid in enumerate(self.order)}
        for node in nodes:
            _check_cpt(node)

        self.targets: Tuple[str, ...] = tuple(targets)
        if not self.targets:
            raise NetworkError("at least one target parameter is required")
        for t in self.targets:
            if t not in self.nodes or self.nodes[t].kind != PARAMETER:
                raise NetworkError(f"target {t!r} is not a system parameter node")

        self.activity_scope: Tuple[str, ...] = tuple(activity_scope)
        if len(set(self.activity_scope)) != len(self.activity_scope):
            raise NetworkError("activity scope contains duplicates")
        for a in self.activity_scope:
            if a not in self.nodes or self.nodes[a].kind != ACTIVITY:
                raise NetworkError(f"scope entry {a!r} is not a verification activity node")

        self.scopes: Dict[str, Tuple[str, ...]] = {}
        for name, acts in (scopes or {}).items():
            self.scopes[name] = tuple(acts)
            for a in acts:
                if a not in self.nodes or self.nodes[a].kind != ACTIVITY:
                    raise NetworkError(f"scope {name!r} entry {a!r} is not an activity node")

        self._children: Dict[str, List[str]] = {nid: [] for nid in self.nodes}
        for node in nodes:
            for p in node.parents:
                self._children[p].append(node.id)
        self._engine: Optional[Inference] = None

    def _toposort(self) -> Tuple[str, ...]:
        indeg = {nid: len(n.parents) for nid, n in self.nodes.items()}
        ready = [nid for nid, d in indeg.items() if d == 0]
        out: List[str] = []
        while ready:
            nid = ready.pop()
            out.append(nid)
            for c in self.nodes:
                if nid in self.nodes[c].parents:
                    indeg[c] -= 1
                    if indeg[c] == 0:
                        ready.append(c)
        if len(out) != len(self.nodes):
            raise NetworkError("network contains a cycle")
        return tuple(out)

    def children(self, node_id: str) -> Tuple[str, ...]:
        return tuple(self._children[node_id])

    def restrict_scope(self, activities: Sequence[str]) -> "BayesNetwork":
        """Same joint distribution, different selectable activities."""
        net = BayesNetwork(list(self.nodes.values()), self.targets, activities, self.scopes)
        net._engine = self.engine()  # identical joint, share the memo cache
        return net

    def engine(self) -> "Inference":
        if self._engine is None:
            self._engine = Inference(self)
        return self._engine


def _check_cpt(node: BayesNode) -> None:
    if isinstance(node.cpt, NoisyOr):
        if len(node.cpt.weights) != len(node.parents):
            raise NetworkError(f"node {node.id!r}: weight count != parent count")
        vals = (node.cpt.leak,) + node.cpt.weights
        if any(not (0.0 <= v <= 1.0) for v in vals):
            raise NetworkError(f"node {node.id!r}: leak/weights outside [0, 1]")
    elif isinstance(node.cpt, ExplicitTable):
        want = {"".join(bits) for bits in product("01", repeat=len(node.parents))}
        got = set(node.cpt.rows)
        if got != want:
            raise NetworkError(f"node {node.id!r}: explicit table rows must cover {len(want)} parent assignments")
        if any(not (0.0 <= v <= 1.0) for v in node.cpt.rows.values()):
            raise NetworkError(f"node {node.id!r}: probabilities outside [0, 1]")
    else:
        raise NetworkError(f"node {node.id!r}: unknown CPT form")


class _Factor:
    __slots__ = ("vars", "table")

    def __init__(self, vars: Tuple[str, ...], table: np.ndarray):
        self.vars = vars
        self.table = table


class Inference:
    """Exact posterior queries with a per-network memo cache.

    The cache is safe to share: queries are pure functions of (evidence,
    query), so repeated evaluation during search costs one dict lookup.
    """

    def __init__(self, net: BayesNetwork):
        self.net = net
        self._cache: Dict[Tuple[str, Tuple[Tuple[str, bool], ...]], float] = {}
        self._node_factors: Dict[str, _Factor] = {}

    def posterior(self, evidence: Evidence, query: str) -> float:
        """P(query = true | evidence); raises on impossible evidence."""
        if query not in self.net.nodes:
            raise NetworkError(f"unknown query node {query!r}")
        for k in evidence:
            if k not in self.net.nodes:
                raise NetworkError(f"unknown evidence node {k!r}")
        key = (query, tuple(sorted((k, bool(v)) for k, v in evidence.items())))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        value = self._query(dict(key[1]), query)
        self._cache[key] = value
        return value

    def _factor_for(self, node_id: str) -> _Factor:
        cached = self._node_factors.get(node_id)
        if cached is not None:
            return cached
        node = self.net.nodes[node_id]
        p = len(node.parents)
        if isinstance(node.cpt, NoisyOr):
            fail = np.full((2,) * p, 1.0 - node.cpt.leak)
            for axis, w in enumerate(node.cpt.weights):
                shape = [1] * p
                shape[axis] = 2
                fail = fail * np.array([1.0, 1.0 - w]).reshape(shape)
            p_true = 1.0 - fail
        else:
            p_true = np.empty((2,) * p)
            for bits in product((0, 1), repeat=p):
                key = "".join(str(b) for b in bits)
                p_true[bits] = node.cpt.rows[key]
        table = np.stack([1.0 - p_true, p_true], axis=-1)
        factor = _Factor(node.parents + (node_id,), table)
        self._node_factors[node_id] = factor
        return factor

    def _query(self, evidence: Dict[str, bool], query: str) -> float:
        keep = self._ancestral(set(evidence) | {query})
        factors: List[_Factor] = []
        for nid in keep:
            f = self._factor_for(nid)
            f = _reduce(f, evidence)
            factors.append(f)

        hidden = [v for v in keep if v != query and v not in evidence]
        for var in _elimination_order(hidden, factors):
            touching = [f for f in factors if var in f.vars]
            factors = [f for f in factors if var not in f.vars]
            merged = _multiply(touching, self._rank)
            axis = merged.vars.index(var)
            factors.append(_Factor(
                merged.vars[:axis] + merged.vars[axis + 1:],
                merged.table.sum(axis=axis),
            ))

        result = _multiply(factors, self._rank)
        if query in evidence:
            z = float(result.table.sum())
            if z <= 0.0:
                raise ImpossibleEvidenceError("evidence has zero probability")
            return 1.0 if evidence[query] else 0.0
        axis = result.vars.index(query)
        marginal = result.table.sum(axis=tuple(i for i in range(result.table.ndim) if i != axis))
        z = float(marginal.sum())
        if z <= 0.0:
            raise ImpossibleEvidenceError("evidence has zero probability")
        return float(marginal[1] / z)

    def _rank(self, var: str) -> int:
        return self.net._index[var]

    def _ancestral(self, seeds: Iterable[str]) -> List[str]:
        seen = set()
        stack = list(seeds)
        while stack:
            nid = stack.pop()
            if nid in seen:
                continue
            seen.add(nid)
            stack.extend(self.net.nodes[nid].parents)
        return [nid for nid in self.net.order if nid in seen]


def _reduce(factor: _Factor, evidence: Mapping[str, bool]) -> _Factor:
    vars_, table = factor.vars, factor.table
    for var in factor.vars:
        if var in evidence:
            axis = vars_.index(var)
            table = np.take(table, int(evidence[var]), axis=axis)
            vars_ = vars_[:axis] + vars_[axis + 1:]
    return _Factor(vars_, table)


def _multiply(factors: Sequence[_Factor], rank) -> _Factor:
    if not factors:
        return _Factor((), np.array(1.0))
    all_vars = sorted({v for f in factors for v in f.vars}, key=rank)
    out_vars = tuple(all_vars)
    table = np.array(1.0)
    for f in factors:
        shape = [2 if v in f.vars else 1 for v in out_vars]
        # transpose factor axes into global order before broadcasting
        perm = sorted(range(len(f.vars)), key=lambda i: rank(f.vars[i]))
        table = table * f.table.transpose(perm).reshape(shape)
    return _Factor(out_vars, table)


def _elimination_order(hidden: Sequence[str], factors: Sequence[_Factor]) -> List[str]:
    # greedy: always eliminate the variable whose merged factor stays smallest
    clusters = [set(f.vars) for f in factors]
    remaining = list(hidden)
    order: List[str] = []
    while remaining:
        best_var = None
        best_width = None
        for var in remaining:
            width = len(set().union(*(c for c in clusters if var in c))) - 1
            if best_width is None or width < best_width:
                best_var, best_width = var, width
        order.append(best_var)
        remaining.remove(best_var)
        merged: set = set()
        kept = []
        for c in clusters:
            if best_var in c:
                merged |= c
            else:
                kept.append(c)
        merged.discard(best_var)
        if merged:
            kept.append(merged)
        clusters = kept
    return order


def posterior(net: BayesNetwork, evidence: Evidence, query: str) -> float:
    """Exact P(query = true | evidence) on a shared per-network engine."""
    return net.engine().posterior(evidence, query)


# ---------------------------------------------------------------------------
# serialization

def network_to_dict(net: BayesNetwork) -> dict:
    nodes = []
    for node in net.nodes.values():
        if isinstance(node.cpt, NoisyOr):
            cpt = {"noisy_or": {"leak": node.cpt.leak, "weights": list(node.cpt.weights)}}
        else:
            cpt = {"explicit": {"rows": dict(node.cpt.rows)}}
        nodes.append({"id": node.id, "kind": node.kind, "parents": list(node.parents), "cpt": cpt})
    out = {
        "nodes": nodes,
        "targets": list(net.targets),
        "activity_scope": list(net.activity_scope),
    }
    if net.scopes:
        out["scopes"] = {name: list(acts) for name, acts in net.scopes.items()}
    return out


def network_from_dict(data: Mapping) -> BayesNetwork:
    try:
        raw_nodes = data["nodes"]
        targets = data["targets"]
        scope = data["activity_scope"]
    except KeyError as missing:
        raise NetworkError(f"network file missing field {missing.args[0]!r}") from None
    nodes = []
    for raw in raw_nodes:
        cpt_raw = raw.get("cpt", {})
        if "noisy_or" in cpt_raw:
            spec = cpt_raw["noisy_or"]
            cpt: Cpt = NoisyOr(leak=float(spec["leak"]), weights=tuple(float(w) for w in spec["weights"]))
        elif "explicit" in cpt_raw:
            cpt = ExplicitTable(rows={str(k): float(v) for k, v in cpt_raw["explicit"]["rows"].items()})
        else:
            raise NetworkError(f"node {raw.get('id')!r}: cpt must be noisy_or or explicit")
        nodes.append(BayesNode(
            id=str(raw["id"]),
            kind=str(raw["kind"]),
            parents=tuple(str(p) for p in raw.get("parents", ())),
            cpt=cpt,
        ))
    return BayesNetwork(nodes, targets, scope, data.get("scopes"))


def load_network(path) -> BayesNetwork:
    with open(path, "r", encoding="utf-8") as fh:
        return network_from_dict(json.load(fh))


def save_network(net: BayesNetwork, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(network_to_dict(net), fh, indent=2, sort_keys=True)
        fh.write("\n")
