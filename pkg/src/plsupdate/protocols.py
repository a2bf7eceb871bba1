"""Node and controller behaviour for each update scheme.

Every node follows the same skeleton: store labels granted by the
controller as pending, apply a pending label only once the scheme's gate
passes against what the neighbors have announced, and announce every
change to all neighbors. After each step the node runs its local verifier
on what it has applied and raises a latched alarm on NO.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Optional

from .forwarding import FlowId
from .labeling import (
    FlowLabel,
    TreeLabel,
    Verdict,
    YES,
    NO,
    may_apply_flow,
    may_apply_predsucc,
    may_apply_tree,
    prove_flow,
    prove_tree,
    tree_depths,
    verify_flow_local,
    verify_predsucc_local,
    verify_tree_local,
)
from .topology import Graph, NodeId, all_distances, hop_distance, neighbors

CONTROLLER = -1


class Scheme(str, enum.Enum):
    NAIVE_FULL = "NAIVE_FULL"
    PRED_SUCC = "PRED_SUCC"
    DIST_FLOW = "DIST_FLOW"
    VERSIONED_TREE = "VERSIONED_TREE"
    CENTRAL_BASELINE = "CENTRAL_BASELINE"


FLOW_SCHEMES = {Scheme.PRED_SUCC, Scheme.DIST_FLOW}
TREE_SCHEMES = {Scheme.VERSIONED_TREE, Scheme.NAIVE_FULL}


class Kind(str, enum.Enum):
    GRANT = "LabelGrant"
    ANNOUNCE = "Announce"
    ACK = "Ack"
    COMMAND = "Command"
    ALARM = "Alarm"


class InvalidRoute(ValueError):
    pass


class Message(NamedTuple):
    kind: Kind
    src: int
    dst: int
    payload: object = None
    sent_at: int = 0
    deliver_at: int = 0
    # Application (node, label) this message is causally waiting on; Commands only.
    cause: Optional[tuple] = None

    def untimed(self) -> "Message":
        return self._replace(sent_at=0, deliver_at=0)


def label_key(label):
    return label.flow if isinstance(label, FlowLabel) else label.destination


@dataclass(frozen=True)
class Application:
    node: NodeId
    label: object
    dep: Optional[tuple]  # (neighbor, neighbor's label) that opened the gate

    @property
    def ident(self):
        return (self.node, self.label)


@dataclass(frozen=True)
class NodeState:
    id: NodeId
    nbrs: tuple
    applied: dict = field(default_factory=dict)
    pending: dict = field(default_factory=dict)  # key -> tuple of labels
    view: dict = field(default_factory=dict)  # (nbr, key) -> label
    alarm: bool = False
    down: frozenset = frozenset()  # neighbors behind a failed link

    def nbr_view(self, key) -> dict:
        return {w: self.view.get((w, key)) for w in self.nbrs if w not in self.down}

    def evolve(self, **changes) -> "NodeState":
        """Cheap ``dataclasses.replace``; also drops any cached state key."""
        new = object.__new__(NodeState)
        d = new.__dict__
        d.update(self.__dict__)
        d.pop("_ckey", None)
        d.update(changes)
        return new

    def key(self):
        return (
            self.id,
            frozenset(self.applied.items()),
            frozenset(self.pending.items()),
            frozenset(self.view.items()),
            self.alarm,
            self.down,
        )


@dataclass(frozen=True)
class Step:
    state: NodeState
    out: list
    applied: list

    def __iter__(self):
        return iter((self.state, self.out, self.applied))


Gate = Callable[[Scheme, NodeState, object], Optional[tuple]]


def default_gate(scheme: Scheme, st: NodeState, label) -> Optional[tuple]:
    """Return the enabling dependency (or ``()`` when none is needed), else None."""
    v = st.id
    key = label_key(label)
    nv = st.nbr_view(key)
    if scheme is Scheme.DIST_FLOW:
        if may_apply_flow(v, label, nv):
            return () if label.succ is None else (label.succ, nv[label.succ])
        return None
    if scheme is Scheme.PRED_SUCC:
        if may_apply_predsucc(v, label, nv):
            return () if label.succ is None else (label.succ, nv[label.succ])
        return None
    if scheme is Scheme.VERSIONED_TREE:
        if may_apply_tree(v, label, nv, st.applied.get(key)):
            return () if label.parent is None else (label.parent, nv[label.parent])
        return None
    if scheme is Scheme.NAIVE_FULL:
        if label.parent is not None or v == label.destination:
            return ()
        return None
    return None


def local_verdict(scheme: Scheme, st: NodeState, label) -> Verdict:
    nv = st.nbr_view(label_key(label))
    if isinstance(label, TreeLabel):
        return verify_tree_local(st.id, label, nv)
    if scheme is Scheme.PRED_SUCC:
        return verify_predsucc_local(st.id, label, nv)
    return verify_flow_local(st.id, label, nv)


def node_verdict(scheme: Scheme, st: NodeState) -> Verdict:
    """Conjunction of the local verdicts over every applied label."""
    if scheme is Scheme.CENTRAL_BASELINE:
        return YES
    for key in sorted(st.applied):
        verdict = local_verdict(scheme, st, st.applied[key])
        if not verdict:
            return verdict
    return YES


def _newer(old, new) -> bool:
    if old is None:
        return True
    if isinstance(new, TreeLabel):
        return new.version >= old.version
    return True


def try_apply(st: NodeState, scheme: Scheme, gate: Gate = default_gate):
    """Apply pending labels until no gate passes. Returns (state, [Application])."""
    if scheme is Scheme.CENTRAL_BASELINE:
        return st, []
    if not st.pending:
        return st, []
    st = st.evolve(applied=dict(st.applied), pending=dict(st.pending))
    applied, pending = st.applied, st.pending
    done = []
    progress = True
    while progress:
        progress = False
        for key in sorted(pending):
            cur = applied.get(key)
            cands = [lab for lab in pending[key] if not _stale(cur, lab)]
            # Highest version first: a node may skip intermediate tree versions.
            cands.sort(key=_rank, reverse=True)
            for lab in cands:
                dep = gate(scheme, st, lab)
                if dep is None:
                    continue
                applied[key] = lab
                done.append(Application(st.id, lab, dep or None))
                cands = [c for c in cands if not _stale(lab, c)]
                progress = True
                break
            if cands:
                pending[key] = tuple(sorted(cands, key=_rank))
            else:
                pending.pop(key)
    return st, done


def _rank(label):
    return label.version if isinstance(label, TreeLabel) else label.flow.tag


def _stale(cur, lab) -> bool:
    """True when ``lab`` is not an upgrade over the applied ``cur``."""
    if cur is None:
        return False
    if isinstance(lab, TreeLabel):
        return lab.version <= cur.version
    return cur == lab


def on_receive(st: NodeState, msg: Message, scheme: Scheme, gate: Gate = default_gate) -> Step:
    if msg.dst != st.id:
        raise ValueError(f"message for {msg.dst} delivered to {st.id}")
    out: list = []
    done: list = []
    lab = msg.payload
    if msg.kind is Kind.GRANT:
        if not isinstance(lab, (FlowLabel, TreeLabel)):
            return _alarm(st, out, done, "malformed-grant")
        key = label_key(lab)
        cur = st.applied.get(key)
        if cur == lab:
            # Re-grant of what is already in place: an immediate no-op application.
            done.append(Application(st.id, lab, None))
        elif not _stale(cur, lab):
            pend = set(st.pending.get(key, ()))
            pend.add(lab)
            st = st.evolve(pending={**st.pending, key: tuple(sorted(pend, key=_rank))})
    elif msg.kind is Kind.COMMAND:
        if not isinstance(lab, (FlowLabel, TreeLabel)):
            return _alarm(st, out, done, "malformed-command")
        st = st.evolve(applied={**st.applied, label_key(lab): lab})
        done.append(Application(st.id, lab, msg.cause))
        out.append(Message(Kind.ACK, st.id, CONTROLLER, lab))
        out.extend(_announce(st, lab))
    elif msg.kind is Kind.ANNOUNCE:
        if not isinstance(lab, (FlowLabel, TreeLabel)) or msg.src not in st.nbrs:
            return _alarm(st, out, done, "malformed-announce")
        vk = (msg.src, label_key(lab))
        if _newer(st.view.get(vk), lab):
            st = st.evolve(view={**st.view, vk: lab})
    else:
        return _alarm(st, out, done, f"unexpected-{msg.kind.value}")

    st, apps = try_apply(st, scheme, gate)
    for a in apps:
        out.extend(_announce(st, a.label))
    done.extend(apps)
    if not st.alarm:
        verdict = node_verdict(scheme, st)
        if not verdict:
            return _alarm(st, out, done, verdict.reason)
    return Step(st, out, done)


def is_noop(st: NodeState, msg: Message) -> bool:
    """True for an Announce whose delivery to ``st`` cannot change anything.

    Views only move forward, so an announce the receiver already holds (or,
    for trees, one at a lower version) stays a no-op whenever it arrives.
    """
    if msg.kind is not Kind.ANNOUNCE or msg.src in st.down:
        return False
    lab = msg.payload
    if not isinstance(lab, (FlowLabel, TreeLabel)) or msg.src not in st.nbrs:
        return False
    seen = st.view.get((msg.src, label_key(lab)))
    if seen is None:
        return False
    return seen == lab or (isinstance(lab, TreeLabel) and lab.version <= seen.version)


def _announce(st: NodeState, lab) -> list:
    return [Message(Kind.ANNOUNCE, st.id, w, lab) for w in st.nbrs if w not in st.down]


def _alarm(st: NodeState, out, done, reason: str) -> Step:
    if st.alarm:
        return Step(st, out, done)
    st = st.evolve(alarm=True)
    return Step(st, out + [Message(Kind.ALARM, st.id, CONTROLLER, reason)], done)


def observe_link_down(st: NodeState, scheme: Scheme, nbr: NodeId) -> Step:
    """Fail-stop detection of the link to ``nbr``; alarm if forwarding has no way out."""
    st = st.evolve(down=st.down | {nbr})
    for key in sorted(st.applied):
        lab = st.applied[key]
        if isinstance(lab, TreeLabel) and lab.parent == nbr:
            if fallback_candidate(st.id, lab, st.nbr_view(key)) is None:
                return _alarm(st, [], [], "no-fallback")
        elif isinstance(lab, FlowLabel) and lab.succ == nbr:
            return _alarm(st, [], [], "succ-link-down")
    return Step(st, [], [])


def fallback_candidate(v: NodeId, own: TreeLabel, alive_nbr_labels: dict) -> Optional[tuple]:
    """Any alive neighbor at smaller depth or higher version will do.

    Preference: smallest depth, then highest version, then lowest id.
    Returns ``(neighbor, neighbor_label)`` or None.
    """
    best = None
    for w in sorted(alive_nbr_labels):
        lab = alive_nbr_labels[w]
        if lab is None or lab.destination != own.destination or w == own.parent:
            continue
        if lab.depth < own.depth or lab.version > own.version:
            k = (lab.depth, -lab.version, w)
            if best is None or k < best[0]:
                best = (k, w, lab)
    return None if best is None else (best[1], best[2])


# --- routes and controller ---------------------------------------------------

@dataclass(frozen=True)
class FlowRoutes:
    source: NodeId
    destination: NodeId
    old_path: tuple
    new_path: tuple
    old_tag: int = 0
    new_tag: int = 1

    @property
    def old_flow(self) -> FlowId:
        return FlowId(self.old_tag, self.source, self.destination)

    @property
    def new_flow(self) -> FlowId:
        return FlowId(self.new_tag, self.source, self.destination)


@dataclass(frozen=True)
class TreeRoutes:
    destination: NodeId
    old_tree: tuple  # sorted (node, parent) pairs
    new_trees: tuple  # ((version, ((node, parent), ...)), ...)
    old_version: int = 0

    @staticmethod
    def make(destination, old_tree: dict, new_trees, old_version: int = 0) -> "TreeRoutes":
        return TreeRoutes(
            destination,
            tuple(sorted(old_tree.items())),
            tuple((ver, tuple(sorted(t.items()))) for ver, t in new_trees),
            old_version,
        )

    def old_parents(self) -> dict:
        return dict(self.old_tree)

    def new_parents(self) -> list:
        return [(ver, dict(t)) for ver, t in self.new_trees]

    @property
    def final_version(self) -> int:
        return max([self.old_version] + [ver for ver, _ in self.new_trees])


def validate_routes(scheme: Scheme, g: Graph, routes) -> None:
    try:
        if isinstance(routes, FlowRoutes):
            if scheme in TREE_SCHEMES:
                raise InvalidRoute(f"{scheme.value} needs tree routes")
            for p in (routes.old_path, routes.new_path):
                if not p or p[0] != routes.source or p[-1] != routes.destination:
                    raise InvalidRoute(f"path {p} does not run from source to destination")
                prove_flow(p, routes.old_flow, g)
        elif isinstance(routes, TreeRoutes):
            if scheme in FLOW_SCHEMES:
                raise InvalidRoute(f"{scheme.value} needs flow routes")
            full = set(g.nodes)
            for ver, t in [(routes.old_version, routes.old_parents())] + routes.new_parents():
                if set(t) != full:
                    raise InvalidRoute(f"tree version {ver} does not span all nodes")
                prove_tree(t, routes.destination, ver, g)
            vers = [ver for ver, _ in routes.new_trees]
            if any(ver < routes.old_version for ver in vers) or len(set(vers)) != len(vers):
                raise InvalidRoute("new tree versions must be distinct and not below the old one")
        else:
            raise InvalidRoute(f"unknown route object {routes!r}")
    except InvalidRoute:
        raise
    except ValueError as exc:
        raise InvalidRoute(str(exc)) from exc


def initial_labels(routes) -> dict:
    """Labels in place before the update: node -> {key: label}."""
    out: dict = {}
    if isinstance(routes, FlowRoutes):
        for v, lab in prove_flow(routes.old_path, routes.old_flow).items():
            out.setdefault(v, {})[lab.flow] = lab
    else:
        for v, lab in prove_tree(routes.old_parents(), routes.destination, routes.old_version).items():
            out.setdefault(v, {})[lab.destination] = lab
    return out


def target_labels(routes) -> dict:
    """Labels every involved node must hold once the update is complete."""
    if isinstance(routes, FlowRoutes):
        return prove_flow(routes.new_path, routes.new_flow)
    final = routes.final_version
    trees = dict(routes.new_parents())
    parents = trees.get(final, routes.old_parents())
    return prove_tree(parents, routes.destination, final)


def _grant_order(routes) -> list:
    """(node, label) pairs in the order the controller hands them out."""
    if isinstance(routes, FlowRoutes):
        labels = prove_flow(routes.new_path, routes.new_flow)
        return [(v, labels[v]) for v in reversed(routes.new_path)]
    order = []
    for ver, t in sorted(routes.new_parents()):
        labels = prove_tree(t, routes.destination, ver)
        order.extend(sorted(((v, labels[v]) for v in labels), key=lambda x: (x[1].depth, x[0])))
    return order


@dataclass(frozen=True)
class Plan:
    messages: tuple
    sequential: bool  # release one Command per Ack


def controller_plan(scheme: Scheme, g: Graph, routes) -> Plan:
    validate_routes(scheme, g, routes)
    site = g.controller_site
    if scheme is Scheme.CENTRAL_BASELINE:
        cmds = []
        old = initial_labels(routes)
        for v, lab in _grant_order(routes):
            if isinstance(lab, TreeLabel):
                cur = old.get(v, {}).get(lab.destination)
                if cur is not None and cur.parent == lab.parent and lab.parent is not None:
                    continue  # unchanged rule: no command needed
            cmds.append(Message(Kind.COMMAND, CONTROLLER, v, lab))
        if cmds:
            h = hop_distance(g, site, cmds[0].dst)
            cmds[0] = cmds[0]._replace(sent_at=0, deliver_at=h)
        return Plan(tuple(cmds), True)
    if scheme is Scheme.NAIVE_FULL:
        if not isinstance(routes, TreeRoutes):
            raise InvalidRoute("NAIVE_FULL needs tree routes")
    hops = all_distances(g, site)
    msgs = []
    for k, (v, lab) in enumerate(_grant_order(routes)):
        msgs.append(Message(Kind.GRANT, CONTROLLER, v, lab, sent_at=k, deliver_at=k + hops[v]))
    return Plan(tuple(msgs), False)


@dataclass(frozen=True)
class ControllerState:
    queue: tuple = ()  # Commands not yet released (sequential mode)
    outstanding: Optional[tuple] = None  # (node, label) awaiting Ack
    alarms: tuple = ()

    def key(self):
        return (self.queue, self.outstanding, self.alarms)


def controller_start(plan: Plan):
    """Initial controller state and the messages it sends at time zero onward."""
    if plan.sequential:
        if not plan.messages:
            return ControllerState(), []
        first, rest = plan.messages[0], plan.messages[1:]
        return ControllerState(queue=rest, outstanding=(first.dst, first.payload)), [first]
    return ControllerState(), list(plan.messages)


def controller_receive(cs: ControllerState, msg: Message):
    if msg.kind is Kind.ALARM:
        return replace(cs, alarms=cs.alarms + ((msg.src, msg.payload),)), []
    if msg.kind is Kind.ACK and cs.outstanding == (msg.src, msg.payload):
        if not cs.queue:
            return replace(cs, outstanding=None), []
        nxt = cs.queue[0]._replace(cause=cs.outstanding)
        return replace(cs, queue=cs.queue[1:], outstanding=(nxt.dst, nxt.payload)), [nxt]
    return cs, []


def make_nodes(g: Graph, routes) -> dict:
    labels = initial_labels(routes)
    nodes = {}
    for v in g.nodes:
        nbrs = tuple(sorted(neighbors(g, v)))
        view = {}
        for w in nbrs:
            for key, lab in labels.get(w, {}).items():
                view[(w, key)] = lab
        nodes[v] = NodeState(v, nbrs, applied=dict(labels.get(v, {})), view=view)
    return nodes
