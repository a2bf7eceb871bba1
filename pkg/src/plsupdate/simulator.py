"""Deterministic discrete-event engine with a per-event global monitor."""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, replace

from .forwarding import Check, FlowId, ForwardingState, check_blackhole_free, check_loop_free
from .labeling import FlowLabel, TreeLabel
from .protocols import (
    CONTROLLER,
    Application,
    ControllerState,
    FlowRoutes,
    Kind,
    Message,
    NodeState,
    Scheme,
    TreeRoutes,
    controller_plan,
    controller_receive,
    controller_start,
    default_gate,
    make_nodes,
    node_verdict,
    observe_link_down,
    on_receive,
    target_labels,
)
from .scenario import Faults, Fifo, Scenario, ScenarioInvalid, SeededRandomJitter
from .topology import UnknownLink, hop_distance, link
from .trace import Trace, label_json, message_json, payload_hash


# --- shared transition ---------------------------------------------------------

def dispatch(nodes: tuple, ctrl: ControllerState, msg: Message, scheme: Scheme, gate=default_gate):
    """Deliver one message. Returns (nodes, ctrl, outgoing, applications, downgrades)."""
    if msg.dst == CONTROLLER:
        ctrl, out = controller_receive(ctrl, msg)
        return nodes, ctrl, out, [], 0
    before = nodes[msg.dst]
    st, out, apps = on_receive(before, msg, scheme, gate)
    nodes = nodes[: msg.dst] + (st,) + nodes[msg.dst + 1:]
    return nodes, ctrl, out, apps, _downgrades(before, apps)


def _downgrades(before: NodeState, apps) -> int:
    bad = 0
    cur = dict(before.applied)
    for a in apps:
        if isinstance(a.label, TreeLabel):
            old = cur.get(a.label.destination)
            if old is not None and a.label.version < old.version:
                bad += 1
            cur[a.label.destination] = a.label
    return bad


def forwarding_state(nodes, routes):
    """Forwarding rules induced by applied labels, plus the match keys to check."""
    fs = ForwardingState()
    if isinstance(routes, TreeRoutes):
        d = routes.destination
        for st in nodes:
            lab = st.applied.get(d)
            if lab is not None and lab.parent is not None:
                fs.set_rule(st.id, d, lab.parent)
        return fs, [d]
    keys = set()
    for st in nodes:
        for key, lab in st.applied.items():
            if isinstance(lab, FlowLabel):
                keys.add(key)
                if lab.succ is not None:
                    fs.set_rule(st.id, key, lab.succ)
    return fs, sorted(keys)


def active_flow(nodes, routes: FlowRoutes) -> FlowId | None:
    """Tag the source currently stamps on packets: its newest applied flow."""
    src = nodes[routes.source]
    tags = [k for k in src.applied if isinstance(k, FlowId)
            and k.source == routes.source and k.destination == routes.destination]
    return max(tags) if tags else None


def oracle(g, routes, nodes) -> dict:
    fs, keys = forwarding_state(nodes, routes)
    loop = None
    for m in keys:
        c = check_loop_free(fs, g, m)
        if not c.ok:
            loop = c
            break
    if isinstance(routes, TreeRoutes):
        bh = check_blackhole_free(fs, g, g.nodes, routes.destination)
    else:
        m = active_flow(nodes, routes)
        bh = check_blackhole_free(fs, g, [routes.source], m) if m is not None else None
        if bh is None:
            bh = Check(False, witness=routes.source)
    return {"loop": loop.ok if loop else True, "blackhole": bh.ok,
            "loop_witness": list(loop.cycle) if loop else None,
            "blackhole_witness": bh.witness}


def is_complete(nodes, routes, scheme: Scheme) -> bool:
    target = target_labels(routes)
    for v, lab in target.items():
        key = lab.flow if isinstance(lab, FlowLabel) else lab.destination
        cur = nodes[v].applied.get(key)
        if cur is None:
            return False
        if scheme is Scheme.CENTRAL_BASELINE and isinstance(lab, TreeLabel):
            if cur.parent != lab.parent:
                return False
        elif cur != lab:
            return False
    return True


def _rank(lab):
    return lab.version if isinstance(lab, TreeLabel) else lab.flow.tag


def _app_json(a: Application):
    dep = None
    if a.dep is not None:
        dep = [a.dep[0], label_json(a.dep[1])]
    return [a.node, label_json(a.label), dep]


# --- timed run -------------------------------------------------------------------

class _Clock:
    def __init__(self, scenario: Scenario, policy):
        self.g = scenario.graph
        self.policy = policy
        self.rng = random.Random(policy.seed) if isinstance(policy, SeededRandomJitter) else None
        self.failed: set = set()

    def delay(self, msg: Message) -> int | None:
        g, failed = self.g, frozenset(self.failed)
        if msg.src == CONTROLLER or msg.dst == CONTROLLER:
            node = msg.dst if msg.src == CONTROLLER else msg.src
            h = hop_distance(g, g.controller_site, node, failed)
        else:
            h = None if link(msg.src, msg.dst) in failed else hop_distance(g, msg.src, msg.dst, failed)
        if h is None:
            return None
        if self.rng is not None:
            h += self.rng.randint(0, self.policy.max_extra_delay)
        return h

    def alive(self, msg: Message) -> bool:
        if msg.src == CONTROLLER or msg.dst == CONTROLLER:
            node = msg.dst if msg.src == CONTROLLER else msg.src
            return hop_distance(self.g, self.g.controller_site, node, frozenset(self.failed)) is not None
        return link(msg.src, msg.dst) not in self.failed


def run(scenario: Scenario, policy=None, gate=default_gate) -> Trace:
    """Execute one scenario to quiescence and return its trace."""
    try:
        scenario.validate()
    except ValueError as exc:
        raise ScenarioInvalid(str(exc)) from exc
    policy = scenario.policy if policy is None else policy
    g, scheme, routes = scenario.graph, scenario.scheme, scenario.routes
    clock = _Clock(scenario, policy)
    nodes = tuple(make_nodes(g, routes)[v] for v in g.nodes)
    plan = controller_plan(scheme, g, routes)
    ctrl, first = controller_start(plan)
    lost = set(scenario.faults.lost_grants)

    heap: list = []
    seq = 0
    sent = 0

    def push(t, tie, ev):
        nonlocal seq
        heapq.heappush(heap, (t, tie, seq, ev))
        seq += 1

    def send(msg: Message, now: int):
        nonlocal sent
        sent += 1
        if msg.kind is Kind.GRANT and (msg.dst, _rank(msg.payload)) in lost:
            return
        d = clock.delay(msg)
        if d is None:
            return
        msg = msg._replace(sent_at=now, deliver_at=now + d)
        push(msg.deliver_at, (msg.src, msg.dst, payload_hash(msg)), ("deliver", msg))

    for m in first:
        send(m, m.sent_at)
    for u, v, at in scenario.faults.link_failures:
        push(at, (-3, min(u, v), max(u, v)), ("fail", (u, v)))

    trace = Trace()
    init = oracle(g, routes, nodes)
    violations = 0 if (init["loop"] and init["blackhole"]) else 1
    downgrades = 0
    first_send = min((m.sent_at for m in first), default=0)
    last_app = None
    events = 0
    alarms = []

    while heap and events < scenario.max_events:
        t, _, _, ev = heapq.heappop(heap)
        events += 1
        row = {"i": events - 1, "t": t}
        apps = []
        touched = None
        kind, data = ev
        if kind == "deliver":
            msg = data
            row["event"] = {"kind": "deliver", "msg": message_json(msg)}
            if not clock.alive(msg):
                row["dropped"] = True
            else:
                nodes, ctrl, out, apps, bad = dispatch(nodes, ctrl, msg, scheme, gate)
                downgrades += bad
                touched = None if msg.dst == CONTROLLER else msg.dst
                if msg.kind is Kind.ALARM:
                    alarms.append([msg.src, msg.payload])
                for o in out:
                    send(o, t)
        elif kind == "fail":
            u, v = data
            clock.failed.add(link(u, v))
            row["event"] = {"kind": "link_fail", "link": [u, v]}
            push(t + 1, (-2, u, v), ("observe", (u, v)))
            push(t + 1, (-2, v, u), ("observe", (v, u)))
        else:
            v, w = data
            row["event"] = {"kind": "link_observe", "node": v, "peer": w}
            st, out, _ = observe_link_down(nodes[v], scheme, w)
            nodes = nodes[:v] + (st,) + nodes[v + 1:]
            touched = v
            for o in out:
                send(o, t)
        row["applied"] = [_app_json(a) for a in apps]
        if apps:
            last_app = t
            verdicts = oracle(g, routes, nodes)
            row["oracle"] = verdicts
            if not (verdicts["loop"] and verdicts["blackhole"]):
                violations += 1
            for a in apps:
                trace.applications.append((t, a))
        else:
            row["oracle"] = None
        if touched is not None:
            row["local"] = {str(touched): str(node_verdict(scheme, nodes[touched]))}
        trace.rows.append(row)

    complete = is_complete(nodes, routes, scheme)
    trace.summary = {
        "scenario": scenario.name,
        "scheme": scheme.value,
        "n": g.n,
        "complete": complete,
        "quiescent": not heap,
        "status": "COMPLETE" if complete else ("INCOMPLETE" if not heap else "TRUNCATED"),
        "first_send": first_send,
        "completion_time": last_app,
        "message_count": sent,
        "violation_count": violations + downgrades,
        "downgrades": downgrades,
        "alarms": sorted(alarms, key=lambda a: (a[0], str(a[1]))),
        "node_alarms": sorted(st.id for st in nodes if st.alarm),
        "events": events,
    }
    trace.final_nodes = nodes
    return trace


def inject_link_failure(scenario: Scenario, pair, at: int) -> Scenario:
    u, v = pair
    if not scenario.graph.has_link(u, v):
        raise UnknownLink(f"no link {u}-{v}")
    f = scenario.faults
    return replace(scenario, faults=Faults(f.link_failures + ((u, v, at),), f.lost_grants))
