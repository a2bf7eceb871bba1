"""Scenario description, JSON (de)serialization and bundled generators."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace

import jsonschema

from .protocols import FlowRoutes, InvalidRoute, Scheme, TreeRoutes, validate_routes
from .topology import Graph, TopologyError, build_graph, link


class ScenarioInvalid(ValueError):
    pass


class SchemaError(ScenarioInvalid):
    pass


class SemanticError(ScenarioInvalid):
    pass


@dataclass(frozen=True)
class Fifo:
    pass


@dataclass(frozen=True)
class SeededRandomJitter:
    seed: int
    max_extra_delay: int


@dataclass(frozen=True)
class Faults:
    link_failures: tuple = ()  # ((u, v, at), ...)
    lost_grants: tuple = ()  # ((node, version_or_tag), ...)


@dataclass(frozen=True)
class Scenario:
    graph: Graph
    scheme: Scheme
    routes: object
    policy: object = Fifo()
    faults: Faults = Faults()
    name: str = ""
    max_events: int = 1_000_000

    def validate(self) -> "Scenario":
        try:
            validate_routes(self.scheme, self.graph, self.routes)
        except InvalidRoute as exc:
            raise SemanticError(str(exc)) from exc
        for u, v, at in self.faults.link_failures:
            if not self.graph.has_link(u, v):
                raise SemanticError(f"fault on unknown link {u}-{v}")
            if at < 0:
                raise SemanticError("fault time must be non-negative")
        for v, _ in self.faults.lost_grants:
            if v not in self.graph._adj:
                raise SemanticError(f"lost grant for unknown node {v}")
        return self


SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "graph": {
            "type": "object",
            "additionalProperties": False,
            "required": ["nodes", "links"],
            "properties": {
                "nodes": {"type": "integer", "minimum": 1},
                "links": {
                    "type": "array",
                    "items": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
                },
                "controller_site": {"type": "integer", "minimum": 0},
            },
        },
        "scheme": {"enum": [s.value for s in Scheme]},
        "routes": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind", "source", "destination", "old_path", "new_path"],
                    "properties": {
                        "kind": {"const": "flow"},
                        "source": {"type": "integer"},
                        "destination": {"type": "integer"},
                        "old_path": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
                        "new_path": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
                        "old_tag": {"type": "integer", "minimum": 0},
                        "new_tag": {"type": "integer", "minimum": 0},
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind", "destination", "old_tree", "new_trees"],
                    "properties": {
                        "kind": {"const": "tree"},
                        "destination": {"type": "integer"},
                        "old_version": {"type": "integer", "minimum": 0},
                        "old_tree": {"$ref": "#/definitions/parents"},
                        "new_trees": {
                            "type": "array",
                            "items": {
                                "type": "object",
                                "additionalProperties": False,
                                "required": ["version", "parents"],
                                "properties": {
                                    "version": {"type": "integer", "minimum": 0},
                                    "parents": {"$ref": "#/definitions/parents"},
                                },
                            },
                        },
                    },
                },
            ]
        },
        "generator": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name", "l"],
            "properties": {
                "name": {"const": "fig1_chain"},
                "l": {"type": "integer", "minimum": 4},
            },
        },
        "policy": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["fifo", "jitter"]},
                "seed": {"type": "integer"},
                "max_extra_delay": {"type": "integer", "minimum": 0},
            },
        },
        "faults": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "link_failures": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["link", "at"],
                        "properties": {
                            "link": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
                            "at": {"type": "integer", "minimum": 0},
                        },
                    },
                },
                "lost_grants": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["node", "version"],
                        "properties": {"node": {"type": "integer"}, "version": {"type": "integer"}},
                    },
                },
            },
        },
        "monitor": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"max_events": {"type": "integer", "minimum": 1}},
        },
    },
    "required": ["scheme"],
    "oneOf": [
        {"required": ["graph", "routes"], "not": {"required": ["generator"]}},
        {"required": ["generator"], "not": {"anyOf": [{"required": ["graph"]}, {"required": ["routes"]}]}},
    ],
    "definitions": {
        "parents": {
            "type": "object",
            "patternProperties": {"^[0-9]+$": {"type": ["integer", "null"]}},
            "additionalProperties": False,
        }
    },
}


def _parents_from_json(d: dict) -> dict:
    return {int(k): v for k, v in d.items()}


def _parents_to_json(parents: dict) -> dict:
    return {str(k): parents[k] for k in sorted(parents)}


def parse_scenario(text: str) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return scenario_from_dict(doc)


def scenario_from_dict(doc: dict) -> Scenario:
    validator = jsonschema.Draft7Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise SchemaError(f"at {where}: {err.message}")
    scheme = Scheme(doc["scheme"])
    pol = doc.get("policy", {"kind": "fifo"})
    if pol["kind"] == "fifo":
        policy = Fifo()
    else:
        if "seed" not in pol:
            raise SchemaError("at policy: jitter policy requires a seed")
        policy = SeededRandomJitter(pol["seed"], pol.get("max_extra_delay", 0))
    fd = doc.get("faults", {})
    faults = Faults(
        tuple((f["link"][0], f["link"][1], f["at"]) for f in fd.get("link_failures", [])),
        tuple((f["node"], f["version"]) for f in fd.get("lost_grants", [])),
    )
    max_events = doc.get("monitor", {}).get("max_events", 1_000_000)
    name = doc.get("name", "")
    if "generator" in doc:
        sc = fig1_chain(doc["generator"]["l"], scheme)
        return replace(sc, policy=policy, faults=faults, name=name or sc.name, max_events=max_events).validate()
    gd = doc["graph"]
    try:
        g = build_graph(gd["nodes"], [tuple(p) for p in gd["links"]], gd.get("controller_site", 0))
    except TopologyError as exc:
        raise SemanticError(f"at graph: {exc}") from exc
    rd = doc["routes"]
    if rd["kind"] == "flow":
        routes = FlowRoutes(
            rd["source"], rd["destination"], tuple(rd["old_path"]), tuple(rd["new_path"]),
            rd.get("old_tag", 0), rd.get("new_tag", 1),
        )
    else:
        routes = TreeRoutes.make(
            rd["destination"],
            _parents_from_json(rd["old_tree"]),
            [(t["version"], _parents_from_json(t["parents"])) for t in rd["new_trees"]],
            rd.get("old_version", 0),
        )
    return Scenario(g, scheme, routes, policy, faults, name, max_events).validate()


def scenario_to_dict(sc: Scenario) -> dict:
    g = sc.graph
    doc: dict = {
        "name": sc.name,
        "scheme": sc.scheme.value,
        "graph": {
            "nodes": g.n,
            "links": [list(e) for e in g.sorted_links()],
            "controller_site": g.controller_site,
        },
    }
    r = sc.routes
    if isinstance(r, FlowRoutes):
        doc["routes"] = {
            "kind": "flow", "source": r.source, "destination": r.destination,
            "old_path": list(r.old_path), "new_path": list(r.new_path),
            "old_tag": r.old_tag, "new_tag": r.new_tag,
        }
    else:
        doc["routes"] = {
            "kind": "tree", "destination": r.destination, "old_version": r.old_version,
            "old_tree": _parents_to_json(r.old_parents()),
            "new_trees": [{"version": v, "parents": _parents_to_json(t)} for v, t in r.new_parents()],
        }
    if isinstance(sc.policy, SeededRandomJitter):
        doc["policy"] = {"kind": "jitter", "seed": sc.policy.seed, "max_extra_delay": sc.policy.max_extra_delay}
    else:
        doc["policy"] = {"kind": "fifo"}
    doc["faults"] = {
        "link_failures": [{"link": [u, v], "at": at} for u, v, at in sc.faults.link_failures],
        "lost_grants": [{"node": v, "version": x} for v, x in sc.faults.lost_grants],
    }
    doc["monitor"] = {"max_events": sc.max_events}
    return doc


def emit_scenario(sc: Scenario) -> str:
    return json.dumps(scenario_to_dict(sc), indent=2, sort_keys=True) + "\n"


# --- generators --------------------------------------------------------------

def fig1_nodes(l: int):
    """Ids for the chain: v_1..v_l are 0..l-1, the destination d is l."""
    if l < 4:
        raise ValueError("chain needs l >= 4")
    return list(range(l)), l


def fig1_trees(l: int) -> tuple[dict, dict]:
    """Old and new parent maps toward d for the l-node chain.

    Topology is the ring d - v_1 - v_2 - ... - v_l - d. Old rules all point
    along the chain toward v_l and then d. New rules send v_1 straight to d
    and v_i (2 <= i <= l-3) back to v_{i-1}; v_{l-2}, v_{l-1}, v_l keep their
    old rules. v_{i} can only switch once v_{i-1} has, giving l-2 dependent
    updates counting d.
    """
    v, d = fig1_nodes(l)
    old = {d: None}
    for i in range(l - 1):
        old[v[i]] = v[i + 1]
    old[v[l - 1]] = d
    new = dict(old)
    new[v[0]] = d
    for i in range(1, l - 3):
        new[v[i]] = v[i - 1]
    return old, new


def fig1_graph(l: int) -> Graph:
    """The ring, with the controller attached at v_l (far end of the old route)."""
    v, d = fig1_nodes(l)
    links = [(v[i], v[i + 1]) for i in range(l - 1)] + [(d, v[0]), (v[l - 1], d)]
    return build_graph(l + 1, links, controller_site=v[l - 1])


def fig1_paths(l: int) -> tuple[tuple, tuple]:
    """Old and new flow paths from the source v_{l-3} to d."""
    v, d = fig1_nodes(l)
    src = v[l - 4]
    old = tuple(v[l - 4:]) + (d,)
    new = tuple(reversed(v[: l - 3])) + (d,)
    assert new[0] == src
    return old, new


def fig1_chain(l: int, scheme: Scheme = Scheme.DIST_FLOW) -> Scenario:
    g = fig1_graph(l)
    _, d = fig1_nodes(l)
    if scheme in (Scheme.VERSIONED_TREE, Scheme.NAIVE_FULL):
        old, new = fig1_trees(l)
        routes = TreeRoutes.make(d, old, [(1, new)])
    else:
        old_p, new_p = fig1_paths(l)
        routes = FlowRoutes(old_p[0], d, old_p, new_p)
    return Scenario(g, scheme, routes, name=f"fig1_l{l}_{scheme.value.lower()}").validate()


def path_scenario(k: int, scheme: Scheme, policy=Fifo()) -> Scenario:
    """Flow update on a k-node line 0-1-...-(k-1) where old and new paths coincide but tags differ."""
    g = build_graph(k, [(i, i + 1) for i in range(k - 1)], controller_site=k - 1)
    path = tuple(range(k))
    return Scenario(g, scheme, FlowRoutes(0, k - 1, path, path), policy, name=f"path{k}_{scheme.value.lower().replace('_', '')}").validate()


def random_tree(n: int, rng: random.Random, root: int = 0) -> dict:
    """Uniform-ish random parent map over 0..n-1 rooted at ``root`` (random attachment)."""
    order = [v for v in range(n) if v != root]
    rng.shuffle(order)
    placed = [root]
    parents = {root: None}
    for v in order:
        parents[v] = rng.choice(placed)
        placed.append(v)
    return parents


def multi_tree_scenario(n: int, versions: int, rng: random.Random, extra_links: int = 0, scheme=Scheme.VERSIONED_TREE) -> Scenario:
    """Random graph carrying ``versions`` successive random forwarding trees to node 0.

    The graph is the union of all trees plus ``extra_links`` random chords.
    """
    trees = [random_tree(n, rng) for _ in range(versions + 1)]
    edges = set()
    for t in trees:
        for v, p in t.items():
            if p is not None:
                edges.add(link(v, p))
    nodes = list(range(n))
    for _ in range(extra_links):
        u, w = rng.sample(nodes, 2)
        edges.add(link(u, w))
    g = build_graph(n, [tuple(sorted(e)) for e in sorted(edges, key=sorted)], controller_site=rng.randrange(n))
    routes = TreeRoutes.make(0, trees[0], [(i + 1, trees[i + 1]) for i in range(versions)])
    return Scenario(g, scheme, routes, name=f"trees_n{n}_k{versions}").validate()
