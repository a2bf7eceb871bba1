"""Provers and local verifiers for flow paths and forwarding trees.

Provers run at the controller and hand out labels. Verifiers and gates run
at a single node and only look at its own label plus whatever its direct
neighbors have announced. A neighbor that holds no label for the flow or
tree in question shows up as ``None``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Optional

from .forwarding import FlowId
from .topology import Graph, NodeId, neighbors


class LabelingError(ValueError):
    pass


class NonSimplePath(LabelingError):
    pass


class NonAdjacentHop(LabelingError):
    pass


class NotATree(LabelingError):
    pass


class GateViolation(AssertionError):
    """A tree gate was asked about a label that is not a version upgrade."""


class FlowLabel(NamedTuple):
    flow: FlowId
    pred: Optional[NodeId]
    succ: Optional[NodeId]
    dist: int


class TreeLabel(NamedTuple):
    destination: NodeId
    parent: Optional[NodeId]
    depth: int
    version: int


@dataclass(frozen=True)
class Verdict:
    yes: bool
    reason: str | None = None

    def __post_init__(self):
        if not self.yes and not self.reason:
            raise ValueError("a NO verdict needs a reason")

    def __bool__(self):
        return self.yes

    def __str__(self):
        return "YES" if self.yes else f"NO({self.reason})"


YES = Verdict(True)


def NO(reason: str) -> Verdict:
    return Verdict(False, reason)


# --- flow scheme ------------------------------------------------------------

def prove_flow(path, flow: FlowId, g: Graph | None = None) -> dict:
    """Label every node of ``path`` (source first) with pred, succ and hop distance."""
    path = list(path)
    if not path:
        raise NonSimplePath("empty path")
    if len(set(path)) != len(path):
        raise NonSimplePath(f"repeated node in {path}")
    if g is not None:
        for u, w in zip(path, path[1:]):
            if not g.has_link(u, w):
                raise NonAdjacentHop(f"{u}-{w} is not a link")
    k = len(path)
    labels = {}
    for i, v in enumerate(path):
        labels[v] = FlowLabel(
            flow=flow,
            pred=path[i - 1] if i > 0 else None,
            succ=path[i + 1] if i < k - 1 else None,
            dist=k - 1 - i,
        )
    return labels


def verify_flow_local(v: NodeId, own: FlowLabel, nbr_labels: Mapping) -> Verdict:
    """Distance rule plus pred/succ agreement, seen from ``v``."""
    flow = own.flow
    is_dest = v == flow.destination
    if own.dist == 0 or own.succ is None or is_dest:
        if not is_dest:
            return NO("zero-dist-not-destination" if own.dist == 0 else "missing-succ")
        if own.dist != 0 or own.succ is not None:
            return NO("destination-nonzero-dist")
    else:
        if own.succ not in nbr_labels:
            return NO("succ-not-neighbor")
        s = nbr_labels[own.succ]
        if s is None or s.flow != flow:
            return NO("succ-unlabeled")
        if s.dist != own.dist - 1:
            return NO("dist-not-decrement")
        if s.pred != v:
            return NO("succ-pred-mismatch")
    if own.pred is not None:
        if own.pred not in nbr_labels:
            return NO("pred-not-neighbor")
        p = nbr_labels[own.pred]
        if p is not None and p.flow == flow and p.succ != v:
            return NO("pred-succ-mismatch")
    elif v != flow.source:
        return NO("missing-pred")
    return YES


def may_apply_flow(v: NodeId, pending: FlowLabel, nbr_applied: Mapping) -> bool:
    if pending.succ is None:
        return v == pending.flow.destination and pending.dist == 0
    s = nbr_applied.get(pending.succ)
    return s is not None and s.flow == pending.flow and s.dist == pending.dist - 1


def verify_predsucc_local(v: NodeId, own: FlowLabel, nbr_labels: Mapping) -> Verdict:
    """Pred/succ agreement without distances (the scheme before the distance fix)."""
    flow = own.flow
    if own.succ is None:
        if v != flow.destination:
            return NO("missing-succ")
    else:
        if own.succ not in nbr_labels:
            return NO("succ-not-neighbor")
        s = nbr_labels[own.succ]
        if s is None or s.flow != flow:
            return NO("succ-unlabeled")
        if s.pred != v:
            return NO("succ-pred-mismatch")
    if own.pred is not None:
        if own.pred not in nbr_labels:
            return NO("pred-not-neighbor")
        p = nbr_labels[own.pred]
        if p is not None and p.flow == flow and p.succ != v:
            return NO("pred-succ-mismatch")
    return YES


def may_apply_predsucc(v: NodeId, pending: FlowLabel, nbr_applied: Mapping) -> bool:
    """Succ must be in place, and an internal pred must already point at ``v``.

    Source and destination carry no pred/succ obligation of their own, so a
    pred that is the flow source is not waited for.
    """
    flow = pending.flow
    if pending.succ is None:
        return v == flow.destination
    s = nbr_applied.get(pending.succ)
    if s is None or s.flow != flow or s.pred != v:
        return False
    if pending.pred is None or pending.pred == flow.source:
        return True
    p = nbr_applied.get(pending.pred)
    return p is not None and p.flow == flow and p.succ == v


# --- tree scheme ------------------------------------------------------------

def tree_depths(tree: Mapping, destination: NodeId) -> dict:
    """Depth of every node in a parent map; raises NotATree on cycles or strays."""
    if tree.get(destination, None) is not None:
        raise NotATree(f"destination {destination} has a parent")
    children: dict = {}
    for v, p in tree.items():
        if v == destination:
            continue
        if p is None:
            raise NotATree(f"node {v} has no parent")
        if p not in tree and p != destination:
            raise NotATree(f"parent {p} of {v} is not in the map")
        children.setdefault(p, []).append(v)
    depth = {destination: 0}
    queue = deque([destination])
    while queue:
        u = queue.popleft()
        for c in children.get(u, ()):
            depth[c] = depth[u] + 1
            queue.append(c)
    nodes = set(tree) | {destination}
    if set(depth) != nodes:
        raise NotATree(f"nodes {sorted(nodes - set(depth))} do not reach {destination}")
    return depth


def prove_tree(tree: Mapping, destination: NodeId, version: int, g: Graph | None = None) -> dict:
    if version < 0:
        raise ValueError("version must be non-negative")
    depth = tree_depths(tree, destination)
    if g is not None:
        for v, p in tree.items():
            if p is not None and not g.has_link(v, p):
                raise NotATree(f"tree edge {v}-{p} is not a link")
    return {
        v: TreeLabel(destination, tree.get(v), depth[v], version)
        for v in sorted(depth)
    }


def verify_tree_local(v: NodeId, own: TreeLabel, nbr_labels: Mapping) -> Verdict:
    is_dest = v == own.destination
    if own.parent is None or own.depth == 0 or is_dest:
        if not is_dest:
            return NO("zero-depth-not-destination" if own.depth == 0 else "missing-parent")
        if own.parent is not None or own.depth != 0:
            return NO("destination-not-root")
        return YES
    if own.parent not in nbr_labels:
        return NO("parent-not-neighbor")
    p = nbr_labels[own.parent]
    if p is None or p.destination != own.destination:
        return NO("parent-unlabeled")
    if p.version > own.version:
        return YES
    if p.version < own.version:
        return NO("parent-version-behind")
    if own.depth != p.depth + 1:
        return NO("depth-not-decrement")
    return YES


def may_apply_tree(
    v: NodeId,
    pending: TreeLabel,
    nbr_current: Mapping,
    current: TreeLabel | None = None,
) -> bool:
    if current is not None and pending.version <= current.version:
        raise GateViolation(
            f"node {v}: pending version {pending.version} does not exceed {current.version}"
        )
    if pending.parent is None:
        return v == pending.destination and pending.depth == 0
    p = nbr_current.get(pending.parent)
    return (
        p is not None
        and p.destination == pending.destination
        and p.version == pending.version
        and p.depth == pending.depth - 1
    )


def verify_configuration(g: Graph, labels: Mapping, verify, required=()) -> dict:
    """Every node's verdict for a full labeling.

    Labeled nodes run ``verify`` on their own view. A node in ``required`` that
    holds no label rejects, since it has nothing to check its rule against.
    Unlabeled nodes outside ``required`` are not participants and stay silent.
    """
    out = {}
    for v in sorted(g.nodes):
        own = labels.get(v)
        if own is None:
            if v in required:
                out[v] = NO("unlabeled")
            continue
        out[v] = verify(v, own, {w: labels.get(w) for w in neighbors(g, v)})
    return out
