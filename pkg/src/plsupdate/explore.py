"""Exhaustive exploration of message delivery orders.

Timing is ignored here: every in-flight message may be delivered next.
``enumerate_interleavings`` walks the full tree of delivery orders and
yields one trace per order. ``explore`` visits the same executions but
merges identical global states, which keeps exhaustive safety checks
tractable; since the oracles are functions of the global state, checking
every reachable state once covers every event of every interleaving.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .protocols import (
    CONTROLLER,
    Kind,
    controller_plan,
    controller_start,
    default_gate,
    is_noop,
    make_nodes,
    node_verdict,
)
from .scenario import Scenario
from .simulator import _app_json, _rank, dispatch, is_complete, oracle
from .trace import Trace, message_json


class ExplosionGuard(RuntimeError):
    pass


def _node_key(st):
    k = st.__dict__.get("_ckey")
    if k is None:
        k = st.key()
        object.__setattr__(st, "_ckey", k)
    return k


def _initial(scenario: Scenario, gate):
    g = scenario.graph
    built = make_nodes(g, scenario.routes)
    nodes = tuple(built[v] for v in g.nodes)
    ctrl, first = controller_start(controller_plan(scenario.scheme, g, scenario.routes))
    lost = set(scenario.faults.lost_grants)
    inflight = [m.untimed() for m in first
                if not (m.kind is Kind.GRANT and (m.dst, _rank(m.payload)) in lost)]
    return nodes, ctrl, tuple(inflight)


def _step(nodes, ctrl, inflight, i, scheme, gate):
    msg = inflight[i]
    rest = list(inflight[:i] + inflight[i + 1:])
    nodes, ctrl, out, apps, bad = dispatch(nodes, ctrl, msg, scheme, gate)
    alarms = []
    queue = list(out)
    # Alarms only inform the controller; deliver them at once so they add no branching.
    while queue:
        o = queue.pop(0)
        if o.kind is Kind.ALARM:
            alarms.append((o.src, o.payload))
            nodes, ctrl, more, _, _ = dispatch(nodes, ctrl, o, scheme, gate)
            queue.extend(more)
        else:
            rest.append(o.untimed())
    return msg, nodes, ctrl, tuple(rest), apps, bad, alarms


def _choices(inflight):
    """Indices of distinct messages (identical copies are interchangeable)."""
    seen = set()
    for i, m in enumerate(inflight):
        if m not in seen:
            seen.add(m)
            yield i


def _violated(v: dict) -> bool:
    return not (v["loop"] and v["blackhole"])


def enumerate_interleavings(scenario: Scenario, max_events: int = 10_000, cap: int = 100_000, gate=default_gate):
    """Yield a Trace for every distinct delivery order of the scenario's messages."""
    scenario.validate()
    g, scheme, routes = scenario.graph, scenario.scheme, scenario.routes
    nodes, ctrl, inflight = _initial(scenario, gate)
    count = 0
    # Each frame: (nodes, ctrl, inflight, rows, violations, downgrades, iterator over choices)
    stack = [(nodes, ctrl, inflight, [], 0, 0, iter(list(_choices(inflight))))]
    while stack:
        nodes, ctrl, inflight, rows, viol, down, it = stack[-1]
        if not inflight or len(rows) >= max_events:
            stack.pop()
            count += 1
            if count > cap:
                raise ExplosionGuard(f"more than {cap} interleavings")
            yield _finish(scenario, nodes, inflight, rows, viol, down)
            continue
        i = next(it, None)
        if i is None:
            stack.pop()
            continue
        msg, n2, c2, f2, apps, bad, alarms = _step(nodes, ctrl, inflight, i, scheme, gate)
        row = {"i": len(rows), "t": len(rows), "event": {"kind": "deliver", "msg": message_json(msg)},
               "applied": [_app_json(a) for a in apps], "oracle": None}
        v2 = viol
        if apps:
            row["oracle"] = oracle(g, routes, n2)
            v2 += _violated(row["oracle"])
        if msg.dst != CONTROLLER:
            row["local"] = {str(msg.dst): str(node_verdict(scheme, n2[msg.dst]))}
        if alarms:
            row["alarms"] = [[a, r] for a, r in alarms]
        stack.append((n2, c2, f2, rows + [row], v2, down + bad, iter(list(_choices(f2)))))


def _finish(scenario, nodes, inflight, rows, viol, down) -> Trace:
    complete = is_complete(nodes, scenario.routes, scenario.scheme)
    t = Trace(rows=rows, final_nodes=nodes)
    t.summary = {
        "scenario": scenario.name,
        "scheme": scenario.scheme.value,
        "complete": complete,
        "quiescent": not inflight,
        "status": "COMPLETE" if complete else ("INCOMPLETE" if not inflight else "TRUNCATED"),
        "violation_count": viol + down,
        "downgrades": down,
        "events": len(rows),
        "node_alarms": sorted(st.id for st in nodes if st.alarm),
    }
    return t


@dataclass
class Exploration:
    states: int = 0
    transitions: int = 0
    terminal: int = 0
    terminal_incomplete: int = 0
    violations: int = 0
    downgrades: int = 0
    alarms: int = 0
    first_violation: dict | None = None
    # Violating states where no node's local verdict is NO.
    silent_violations: int = 0
    examples: list = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return self.violations == 0 and self.downgrades == 0


def explore(scenario: Scenario, gate=default_gate, max_states: int = 2_000_000) -> Exploration:
    """Visit every reachable global state under arbitrary delivery order.

    Announces that can no longer change their receiver are dropped from the
    in-flight set (see ``is_noop``); delivering them would only revisit the
    same node states.
    """
    scenario.validate()
    g, scheme, routes = scenario.graph, scenario.scheme, scenario.routes
    nodes, ctrl, first = _initial(scenario, gate)
    rep = Exploration()

    # In-flight messages are interned to ints so a state's multiset is a sorted int tuple.
    ids: dict = {}
    table: list = []

    def intern(m):
        i = ids.get(m)
        if i is None:
            i = ids[m] = len(table)
            table.append(m)
        return i

    def key(nodes, ctrl, inflight):
        return (tuple(_node_key(st) for st in nodes), ctrl.key(), inflight)

    inflight = tuple(sorted(intern(m) for m in first))
    init_verdict = oracle(g, routes, nodes)
    if _violated(init_verdict):
        rep.violations += 1
        rep.first_violation = {"state": "initial", "oracle": init_verdict}
    visited = {key(nodes, ctrl, inflight)}
    stack = [(nodes, ctrl, inflight)]
    rep.states = 1
    while stack:
        nodes, ctrl, inflight = stack.pop()
        if not inflight:
            rep.terminal += 1
            if not is_complete(nodes, routes, scheme):
                rep.terminal_incomplete += 1
            continue
        prev = None
        for pos, i in enumerate(inflight):
            if i == prev:
                continue  # identical copies are interchangeable
            prev = i
            msg = table[i]
            rest = inflight[:pos] + inflight[pos + 1:]
            msg, n2, c2, out, apps, bad, alarms = _step(nodes, ctrl, (msg,), 0, scheme, gate)
            changed = msg.dst
            if changed != CONTROLLER:
                st = n2[changed]
                rest = tuple(j for j in rest if table[j].dst != changed or not is_noop(st, table[j]))
                out = [m for m in out if m.dst != changed or not is_noop(st, m)]
            f2 = tuple(sorted(rest + tuple(intern(m) for m in out))) if out else rest
            rep.transitions += 1
            rep.downgrades += bad
            rep.alarms += len(alarms)
            k = key(n2, c2, f2)
            if k in visited:
                continue
            visited.add(k)
            rep.states += 1
            if rep.states > max_states:
                raise ExplosionGuard(f"more than {max_states} states")
            if apps:
                v = oracle(g, routes, n2)
                if _violated(v):
                    rep.violations += 1
                    if not any(not node_verdict(scheme, st) for st in n2):
                        rep.silent_violations += 1
                    if rep.first_violation is None:
                        rep.first_violation = {"msg": message_json(msg), "oracle": v}
            stack.append((n2, c2, f2))
    return rep


@dataclass
class Walk:
    steps: int
    complete: bool
    violations: int
    downgrades: int
    first_violation: dict | None = None


def random_interleaving(scenario: Scenario, rng, gate=default_gate, max_steps: int = 1_000_000) -> Walk:
    """One delivery order drawn by picking a uniformly random in-flight message at each step."""
    scenario.validate()
    g, scheme, routes = scenario.graph, scenario.scheme, scenario.routes
    nodes, ctrl, inflight = _initial(scenario, gate)
    w = Walk(0, False, 0, 0)
    while inflight and w.steps < max_steps:
        i = rng.randrange(len(inflight))
        msg, nodes, ctrl, inflight, apps, bad, _ = _step(nodes, ctrl, inflight, i, scheme, gate)
        w.steps += 1
        w.downgrades += bad
        if apps:
            v = oracle(g, routes, nodes)
            if _violated(v):
                w.violations += 1
                if w.first_violation is None:
                    w.first_violation = {"step": w.steps, "msg": message_json(msg), "oracle": v}
    w.complete = is_complete(nodes, routes, scheme)
    return w
