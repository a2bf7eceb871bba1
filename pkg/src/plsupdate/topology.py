"""Undirected network topology with a controller attachment point."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

NodeId = int
Link = frozenset  # frozenset({u, v})


class TopologyError(ValueError):
    pass


class DisconnectedGraph(TopologyError):
    pass


class SelfLoop(TopologyError):
    pass


class DuplicateLink(TopologyError):
    pass


class UnknownNode(TopologyError):
    pass


class UnknownLink(TopologyError):
    pass


def link(u: NodeId, v: NodeId) -> frozenset:
    return frozenset((u, v))


@dataclass(frozen=True)
class Graph:
    """Connected graph over dense node ids ``0..n-1``.

    Build through :func:`build_graph`; the constructor does not validate.
    """

    nodes: tuple[NodeId, ...]
    links: frozenset
    controller_site: NodeId
    _adj: dict = field(default=None, repr=False, compare=False, hash=False)

    def __post_init__(self):
        adj = {v: set() for v in self.nodes}
        for e in self.links:
            a, b = sorted(e)
            adj[a].add(b)
            adj[b].add(a)
        object.__setattr__(self, "_adj", {v: frozenset(s) for v, s in adj.items()})

    @property
    def n(self) -> int:
        return len(self.nodes)

    def has_link(self, u: NodeId, v: NodeId) -> bool:
        return link(u, v) in self.links

    def sorted_links(self) -> list[tuple[int, int]]:
        return sorted(tuple(sorted(e)) for e in self.links)


def build_graph(node_count: int, links: Iterable, controller_site: NodeId = 0) -> Graph:
    if node_count < 1:
        raise TopologyError("node_count must be positive")
    nodes = tuple(range(node_count))
    seen: set = set()
    for pair in links:
        u, v = pair
        for x in (u, v):
            if not (isinstance(x, int) and 0 <= x < node_count):
                raise UnknownNode(f"link {u}-{v} references unknown node {x}")
        if u == v:
            raise SelfLoop(f"self-loop at node {u}")
        e = link(u, v)
        if e in seen:
            raise DuplicateLink(f"duplicate link {u}-{v}")
        seen.add(e)
    if not (isinstance(controller_site, int) and 0 <= controller_site < node_count):
        raise UnknownNode(f"controller site {controller_site} is not a node")
    g = Graph(nodes, frozenset(seen), controller_site)
    dist = _bfs(g, 0)
    if len(dist) != node_count:
        missing = sorted(set(nodes) - set(dist))
        raise DisconnectedGraph(f"nodes {missing} unreachable from node 0")
    return g


def _check(g: Graph, v: NodeId) -> None:
    if v not in g._adj:
        raise UnknownNode(f"node {v} not in graph")


def neighbors(g: Graph, v: NodeId) -> frozenset:
    _check(g, v)
    return g._adj[v]


def _bfs(g: Graph, src: NodeId, failed: frozenset = frozenset()) -> dict:
    dist = {src: 0}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for w in sorted(g._adj[u]):
            if w not in dist and link(u, w) not in failed:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def hop_distance(g: Graph, u: NodeId, v: NodeId, failed: frozenset = frozenset()) -> int | None:
    """Shortest path length in hops; ``None`` only when ``failed`` links cut u from v."""
    _check(g, u)
    _check(g, v)
    return _bfs(g, u, failed).get(v)


def all_distances(g: Graph, src: NodeId) -> dict:
    _check(g, src)
    return _bfs(g, src)
