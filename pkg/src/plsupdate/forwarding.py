"""Ground-truth forwarding state and the global oracles.

The oracles here see the whole network at once. Local verification is
checked against them, never the other way round.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, NamedTuple, Union

from .topology import Graph, NodeId, link


class FlowId(NamedTuple):
    """A tagged flow version; ``tag`` distinguishes F, F', F'', ..."""

    tag: int
    source: NodeId
    destination: NodeId


MatchKey = Union[FlowId, int]


class _NoRule:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "NoRule"

    def __bool__(self):
        return False


NoRule = _NoRule()


def destination_of(m: MatchKey) -> NodeId:
    return getattr(m, "destination", m)


@dataclass
class ForwardingState:
    rules: dict = field(default_factory=dict)  # node -> {match: next_hop}

    def set_rule(self, v: NodeId, m: Hashable, next_hop: NodeId, g: Graph | None = None) -> None:
        if g is not None and not g.has_link(v, next_hop):
            raise ValueError(f"next hop {next_hop} is not a neighbor of {v}")
        self.rules.setdefault(v, {})[m] = next_hop

    def delete_rule(self, v: NodeId, m: Hashable) -> None:
        self.rules.get(v, {}).pop(m, None)

    def copy(self) -> "ForwardingState":
        return ForwardingState({v: dict(t) for v, t in self.rules.items()})

    @classmethod
    def from_path(cls, path, m: MatchKey) -> "ForwardingState":
        s = cls()
        for u, w in zip(path, path[1:]):
            s.set_rule(u, m, w)
        return s

    @classmethod
    def from_parents(cls, parents: dict, m: MatchKey) -> "ForwardingState":
        s = cls()
        for v, p in parents.items():
            if p is not None:
                s.set_rule(v, m, p)
        return s


def next_hop(s: ForwardingState, g: Graph, v: NodeId, m: MatchKey):
    if v not in g._adj:
        raise ValueError(f"unknown node {v}")
    return s.rules.get(v, {}).get(m, NoRule)


@dataclass(frozen=True)
class Check:
    ok: bool
    witness: NodeId | None = None
    cycle: tuple | None = None

    def __bool__(self):
        return self.ok


def _walk(s: ForwardingState, g: Graph, src: NodeId, m: MatchKey, stop=frozenset()):
    """Follow rules from src. Returns ('delivered'|'dropped'|'looped', path, extra).

    Reaching a node in ``stop`` counts as delivered.
    """
    d = destination_of(m)
    path = [src]
    pos = {src: 0}
    v = src
    while v != d and v not in stop:
        w = next_hop(s, g, v, m)
        if w is NoRule:
            return "dropped", path, v
        if w in pos:
            return "looped", path + [w], tuple(path[pos[w]:])
        pos[w] = len(path)
        path.append(w)
        v = w
    return "delivered", path, None


def check_blackhole_free(s: ForwardingState, g: Graph, sources: Iterable[NodeId], m: MatchKey) -> Check:
    good: set = set()  # nodes already known to deliver
    for src in sorted(sources):
        if src in good:
            continue
        kind, path, extra = _walk(s, g, src, m, good)
        if kind == "dropped":
            return Check(False, witness=extra)
        if kind == "looped":
            return Check(False, cycle=extra)
        good.update(path)
    return Check(True)


def check_loop_free(s: ForwardingState, g: Graph, m: MatchKey) -> Check:
    """Cycle detection on the functional graph of ``m``'s rules over all nodes."""
    d = destination_of(m)
    succ = {}
    for v, table in s.rules.items():
        if v != d and m in table:
            succ[v] = table[m]
    color: dict = {}
    for start in sorted(succ):
        if start in color:
            continue
        stack = []
        v = start
        while v in succ and v not in color:
            color[v] = "grey"
            stack.append(v)
            v = succ[v]
        if color.get(v) == "grey":
            i = stack.index(v)
            return Check(False, witness=v, cycle=tuple(stack[i:]))
        for u in stack:
            color[u] = "black"
    return Check(True)


@dataclass(frozen=True)
class Delivered:
    path: tuple


@dataclass(frozen=True)
class Dropped:
    node: NodeId
    path: tuple


@dataclass(frozen=True)
class Looped:
    cycle: tuple
    path: tuple


def trace_packet(
    s: ForwardingState,
    g: Graph,
    src: NodeId,
    m: MatchKey,
    max_steps: int | None = None,
    failed: frozenset = frozenset(),
    fallback: Callable | None = None,
):
    """Walk one packet from ``src``.

    A hop over a link in ``failed`` is a drop unless ``fallback(v, state)``
    returns ``(next_node, new_match)``; ``state`` is the packet's current match.
    """
    if src not in g._adj:
        raise ValueError(f"unknown node {src}")
    if max_steps is None:
        max_steps = 2 * g.n
    d = destination_of(m)
    path = [src]
    seen = {(src, m): 0}
    v, cur = src, m
    for _ in range(max_steps):
        if v == d:
            return Delivered(tuple(path))
        w = next_hop(s, g, v, cur)
        if w is not NoRule and link(v, w) in failed:
            w = NoRule
            if fallback is not None:
                alt = fallback(v, cur)
                if alt is not None:
                    w, cur = alt
        if w is NoRule:
            return Dropped(v, tuple(path))
        path.append(w)
        v = w
        if (v, cur) in seen and v != d:
            i = seen[(v, cur)]
            return Looped(tuple(path[i:-1]), tuple(path))
        seen[(v, cur)] = len(path) - 1
    if v == d:
        return Delivered(tuple(path))
    return Looped(tuple(path), tuple(path))
