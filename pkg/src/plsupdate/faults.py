"""Single link failures and the depth/version fallback for tree forwarding.

A packet normally follows the tree it is on. When the next hop sits behind
a failed link the node may hand the packet to any alive neighbor that is
closer to the destination in the same tree, or that holds a tree with a
higher version. Either move strictly increases (version, -depth), so the
fallback cannot loop.
"""

from __future__ import annotations

from dataclasses import dataclass

from .forwarding import Delivered, Dropped, ForwardingState, trace_packet
from .labeling import prove_tree
from .protocols import Scheme, TreeRoutes
from .scenario import Scenario
from .topology import Graph, build_graph, link, neighbors


@dataclass(frozen=True, order=True)
class TreeKey:
    """Match key for one forwarding tree: destination plus version."""

    destination: int
    version: int


def tree_state(labels_by_version: dict) -> ForwardingState:
    fs = ForwardingState()
    for ver, labels in labels_by_version.items():
        for v, lab in labels.items():
            if lab.parent is not None:
                fs.set_rule(v, TreeKey(lab.destination, ver), lab.parent)
    return fs


def best_alternative(g: Graph, labels_by_version: dict, v: int, cur: TreeKey, failed: frozenset):
    """Alive neighbor to use when ``v``'s next hop on ``cur`` is unreachable.

    Preference: smallest depth, then highest version, then lowest id.
    Returns ``(neighbor, TreeKey)`` or None.
    """
    own = labels_by_version[cur.version].get(v)
    if own is None:
        return None
    best = None
    for w in sorted(neighbors(g, v)):
        if link(v, w) in failed:
            continue
        for ver, labels in labels_by_version.items():
            lab = labels.get(w)
            if lab is None or lab.destination != cur.destination:
                continue
            if (ver == cur.version and lab.depth < own.depth) or ver > cur.version:
                k = (lab.depth, -ver, w)
                if best is None or k < best[0]:
                    best = (k, w, TreeKey(cur.destination, ver))
    return None if best is None else (best[1], best[2])


def route_with_fallback(g: Graph, labels_by_version: dict, src: int, primary: TreeKey, failed=frozenset()):
    failed = frozenset(failed)
    fs = tree_state(labels_by_version)

    def fallback(v, cur):
        return best_alternative(g, labels_by_version, v, cur, failed)

    return trace_packet(fs, g, src, primary, failed=failed, fallback=fallback)


def alarming_nodes(g: Graph, labels_by_version: dict, primary: TreeKey, failed_link) -> set:
    """Endpoints of the failed link whose primary next hop is lost with no way around it."""
    u, w = tuple(failed_link)
    failed = frozenset({link(u, w)})
    out = set()
    labels = labels_by_version[primary.version]
    for a, b in ((u, w), (w, u)):
        lab = labels.get(a)
        if lab is not None and lab.parent == b:
            if best_alternative(g, labels_by_version, a, primary, failed) is None:
                out.add(a)
    return out


@dataclass(frozen=True)
class FailureOutcome:
    link: tuple
    outcomes: dict  # node -> Delivered | Dropped | Looped
    alarms: frozenset

    @property
    def all_delivered(self) -> bool:
        return all(isinstance(o, Delivered) for o in self.outcomes.values())


def sweep_single_failures(g: Graph, labels_by_version: dict, primary: TreeKey) -> list:
    """Route from every node under each single link failure."""
    results = []
    for e in g.sorted_links():
        failed = frozenset({link(*e)})
        outcomes = {v: route_with_fallback(g, labels_by_version, v, primary, failed) for v in g.nodes}
        results.append(FailureOutcome(e, outcomes, frozenset(alarming_nodes(g, labels_by_version, primary, e))))
    return results


def explain_drop(g, labels_by_version, primary, outcome: FailureOutcome, v) -> bool:
    """A drop is legitimate only at a failed-link endpoint with no alternative that alarms."""
    o = outcome.outcomes[v]
    if not isinstance(o, Dropped):
        return True
    failed = frozenset({link(*outcome.link)})
    at = o.node
    return at in outcome.link and best_alternative(g, labels_by_version, at, primary, failed) is None and at in outcome.alarms


# --- the bundled two-tree instance -----------------------------------------

TWO_TREE_A = {0: None, 1: 0, 2: 0, 3: 1, 4: 2, 5: 3, 6: 4, 7: 5}
TWO_TREE_B = {0: None, 4: 0, 3: 0, 2: 3, 1: 2, 5: 4, 6: 5, 7: 6}


def tree_labels(scenario: Scenario) -> dict:
    """Labels of every tree a tree scenario carries, keyed by version."""
    r = scenario.routes
    if not isinstance(r, TreeRoutes):
        raise TypeError("fault analysis needs tree routes")
    g = scenario.graph
    out = {r.old_version: prove_tree(r.old_parents(), r.destination, r.old_version, g)}
    for ver, t in r.new_parents():
        out[ver] = prove_tree(t, r.destination, ver, g)
    return out


def two_tree_scenario() -> Scenario:
    """8 nodes, destination 0, two link-disjoint spanning trees (versions 1 and 2)."""
    edges = set()
    for t in (TWO_TREE_A, TWO_TREE_B):
        for v, p in t.items():
            if p is not None:
                edges.add(tuple(sorted((v, p))))
    g = build_graph(8, sorted(edges), controller_site=0)
    routes = TreeRoutes.make(0, TWO_TREE_A, [(2, TWO_TREE_B)], old_version=1)
    return Scenario(g, Scheme.VERSIONED_TREE, routes, name="two_trees8").validate()


def two_tree_instance(scenario: Scenario | None = None):
    """(graph, labels by version, primary key) with the oldest tree as primary."""
    sc = scenario or two_tree_scenario()
    return sc.graph, tree_labels(sc), TreeKey(sc.routes.destination, sc.routes.old_version)
