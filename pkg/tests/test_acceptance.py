"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s`` or as a script with
``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import itertools
import os
import random
import subprocess
import sys
import time
from pathlib import Path

import pytest

from plsupdate.explore import explore, random_interleaving
from plsupdate.faults import alarming_nodes, explain_drop, sweep_single_failures, two_tree_instance
from plsupdate.forwarding import FlowId, ForwardingState, check_blackhole_free, check_loop_free
from plsupdate.instances import path_pair_instances, tree_pair_instances
from plsupdate.labeling import (
    FlowLabel,
    TreeLabel,
    prove_flow,
    prove_tree,
    verify_configuration,
    verify_flow_local,
    verify_predsucc_local,
    verify_tree_local,
)
from plsupdate.metrics import fit, sequential_rounds, speedup_curve
from plsupdate.protocols import Scheme, TreeRoutes, make_nodes, observe_link_down
from plsupdate.scenario import SeededRandomJitter, fig1_chain, multi_tree_scenario, parse_scenario, random_tree
from plsupdate.simulator import run
from plsupdate.topology import build_graph, link

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"

pytestmark = pytest.mark.slow


_capsys = None


@pytest.fixture(autouse=True)
def _uncaptured(capsys):
    global _capsys
    _capsys = capsys
    yield
    _capsys = None


def report(num: int, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}"
    if _capsys is None:
        print(line)
        return
    with _capsys.disabled():
        print("\n" + line, flush=True)


# --- 1 ---------------------------------------------------------------------------

def test_criterion_1_dist_flow_exhaustive_paths():
    t0 = time.perf_counter()
    instances = states = viol = incomplete = 0
    for sc in path_pair_instances(6, Scheme.DIST_FLOW):
        rep = explore(sc)
        instances += 1
        states += rep.states
        viol += rep.violations + rep.downgrades
        incomplete += rep.terminal_incomplete
    secs = time.perf_counter() - t0
    ok = viol == 0 and incomplete == 0 and secs < 300
    report(1, ok, f"{instances} path pairs (<=6 nodes), {states} states, "
                  f"{viol} loop/blackhole states, {incomplete} stuck terminals, {secs:.0f}s (limit 300s)")
    assert ok


# --- 2 ---------------------------------------------------------------------------

def test_criterion_2_versioned_tree():
    t0 = time.perf_counter()
    instances = states = viol = down = 0
    for sc in tree_pair_instances(5, versions=1, scheme=Scheme.VERSIONED_TREE):
        rep = explore(sc)
        instances += 1
        states += rep.states
        viol += rep.violations
        down += rep.downgrades
    walks = walk_viol = walk_down = walk_incomplete = 0
    for seed in range(10_000):
        rng = random.Random(seed)
        sc = multi_tree_scenario(20, 3, rng, extra_links=rng.randrange(8))
        w = random_interleaving(sc, rng)
        walks += 1
        walk_viol += w.violations
        walk_down += w.downgrades
        walk_incomplete += not w.complete
    secs = time.perf_counter() - t0
    ok = viol == down == walk_viol == walk_down == walk_incomplete == 0 and secs < 600
    report(2, ok, f"exhaustive {instances} tree classes (<=5 nodes, old+1 new) {states} states: "
                  f"{viol} violations, {down} downgrades; {walks} random orders (20 nodes, old+3 new): "
                  f"{walk_viol} violations, {walk_down} downgrades, {walk_incomplete} incomplete; "
                  f"{secs:.0f}s (limit 600s)")
    assert ok


# --- 3 ---------------------------------------------------------------------------

def _internal(path) -> int:
    return max(len(path) - 2, 0)


def test_criterion_3_pred_succ_deadlock():
    pairs = list(path_pair_instances(6, Scheme.PRED_SUCC))
    wrong = []
    stuck = done = 0
    for seed in range(1000):
        sc = pairs[seed % len(pairs)]
        t = run(sc, SeededRandomJitter(seed, 4))
        s = t.summary
        deep = _internal(sc.routes.new_path) >= 2
        if deep:
            good = s["status"] == "INCOMPLETE" and s["quiescent"]
            stuck += good
        else:
            good = s["status"] == "COMPLETE"
            done += good
        if not good:
            wrong.append((sc.name, seed, s["status"]))
    deep_runs = sum(_internal(pairs[i % len(pairs)].routes.new_path) >= 2 for i in range(1000))
    ok = not wrong
    report(3, ok, f"1000 seeded runs: {stuck}/{deep_runs} with >=2 internal nodes quiescent-incomplete, "
                  f"{done}/{1000 - deep_runs} with <=1 internal node complete")
    assert ok, wrong[:5]


# --- 4 ---------------------------------------------------------------------------

def _verdicts(g, labels, verify, required=()):
    return verify_configuration(g, labels, verify, required)


def test_criterion_4_disconnected_loop_contrast():
    # Path 0 -> 3 is healthy; 1 and 2 point at each other off to the side.
    g = build_graph(4, [(0, 3), (1, 2), (0, 1), (2, 3)], controller_site=3)
    f = FlowId(0, 0, 3)
    flow_labels = {
        0: FlowLabel(f, None, 3, 1),
        3: FlowLabel(f, 0, None, 0),
        1: FlowLabel(f, 2, 2, 1),
        2: FlowLabel(f, 1, 1, 1),
    }
    fs = ForwardingState()
    for v, lab in flow_labels.items():
        if lab.succ is not None:
            fs.set_rule(v, f, lab.succ)
    global_loop = not check_loop_free(fs, g, f)
    predsucc_all_yes = all(_verdicts(g, flow_labels, verify_predsucc_local).values())

    parents = {0: 3, 1: 2, 2: 1, 3: None}
    n = g.n
    combos = caught = 0
    for depths in itertools.product(range(n + 1), repeat=n):
        for versions in itertools.product(range(3), repeat=n):
            labels = {v: TreeLabel(3, parents[v], depths[v], versions[v]) for v in range(n)}
            combos += 1
            caught += not all(_verdicts(g, labels, verify_tree_local).values())
    ok = global_loop and predsucc_all_yes and caught == combos
    report(4, ok, f"pred/succ checks all YES={predsucc_all_yes} while oracle loop={global_loop}; "
                  f"tree verifier NO in {caught}/{combos} depth x version assignments")
    assert ok


# --- 5 ---------------------------------------------------------------------------

def test_criterion_5_fig1_rounds():
    got = {}
    for l in (6, 10, 20, 50):
        for scheme in (Scheme.CENTRAL_BASELINE, Scheme.DIST_FLOW):
            got[(l, scheme.value)] = sequential_rounds(run(fig1_chain(l, scheme)))
    ok = all(r == l - 2 for (l, _), r in got.items())
    report(5, ok, "sequential_rounds " + ", ".join(f"l={l} {s}={r}" for (l, s), r in sorted(got.items())))
    assert ok


# --- 6 ---------------------------------------------------------------------------

def test_criterion_6_speedup():
    lengths = [8, 16, 32, 64, 128]
    table = speedup_curve(lengths)
    rows = {r[0]: r for r in table.rows}
    quad = fit(lengths, [rows[l][1] for l in lengths], 2)["r2"]
    lin = fit(lengths, [rows[l][2] for l in lengths], 1)["r2"]
    growth = rows[64][3] / rows[32][3]
    ok = quad >= 0.99 and lin >= 0.99 and growth >= 1.8
    report(6, ok, f"central quadratic R^2={quad:.4f}, distributed linear R^2={lin:.4f}, "
                  f"ratio(64)/ratio(32)={growth:.3f} (need >=1.8); ratios "
                  + ", ".join(f"{l}:{rows[l][3]:.2f}" for l in lengths))
    assert ok


# --- 7 ---------------------------------------------------------------------------

def test_criterion_7_fault_heuristic():
    sc = parse_scenario((SCENARIOS / "two_trees8.json").read_text())
    g, labels, primary = two_tree_instance(sc)
    both = sweep_single_failures(g, labels, primary)
    delivered_all = all(o.all_delivered for o in both)

    # Primary tree only: every drop must be at a failed-link endpoint with no
    # alternative, and that endpoint must alarm, both in the data-plane model
    # and in the protocol's own link-down handling.
    only = {primary.version: labels[primary.version]}
    single = sweep_single_failures(g, only, primary)
    explained = all(explain_drop(g, only, primary, o, v) for o in single for v in o.outcomes)
    routes = TreeRoutes.make(0, {v: lab.parent for v, lab in only[primary.version].items()}, [],
                             old_version=primary.version)
    nodes = make_nodes(g, routes)
    agree = True
    drops = 0
    for o in single:
        u, w = o.link
        proto = {a for a, b in ((u, w), (w, u)) if observe_link_down(nodes[a], Scheme.VERSIONED_TREE, b).state.alarm}
        agree &= proto == set(o.alarms) == alarming_nodes(g, only, primary, link(u, w))
        drops += sum(1 for x in o.outcomes.values() if type(x).__name__ == "Dropped")
    ok = delivered_all and explained and agree
    report(7, ok, f"{len(both)} single failures with both trees: all delivered={delivered_all}; "
                  f"primary only: {drops} drops, all at alarming endpoints={explained}, "
                  f"protocol alarms agree={agree}")
    assert ok


# --- 8 ---------------------------------------------------------------------------

def _connect(n, edges, rng):
    edges = set(edges)
    order = list(range(n))
    rng.shuffle(order)
    for i in range(1, n):
        edges.add(link(order[i], order[rng.randrange(i)]))
    for _ in range(rng.randrange(n)):
        a, b = rng.sample(range(n), 2)
        edges.add(link(a, b))
    return build_graph(n, [tuple(sorted(e)) for e in edges])


def _flow_walk_ok(labels, src, dest, limit):
    """Global walk along succ from src: (delivered, hops)."""
    v, hops = src, 0
    while v != dest:
        lab = labels.get(v)
        if lab is None or lab.succ is None or hops > limit:
            return False, hops
        v, hops = lab.succ, hops + 1
    return True, hops


def _flow_case(rng, kind):
    n = rng.randint(4, 9)
    k = rng.randint(2, n - 1)
    path = rng.sample(range(n), k)
    f = FlowId(0, path[0], path[-1])
    labels = prove_flow(path, f)
    extra = {link(a, b) for a, b in zip(path, path[1:])}
    off = [v for v in range(n) if v not in path]
    if kind == "cycle" and k >= 3:
        j = rng.randrange(1, k - 1)
        i = rng.randrange(0, j)
        labels[path[j]] = labels[path[j]]._replace(succ=path[i])
        extra.add(link(path[j], path[i]))
    elif kind == "cycle" and len(off) >= 2:
        a, b = rng.sample(off, 2)
        labels[a] = FlowLabel(f, b, b, rng.randrange(n))
        labels[b] = FlowLabel(f, a, a, rng.randrange(n))
        extra.add(link(a, b))
    elif kind == "distance":
        v = rng.choice(path)
        labels[v] = labels[v]._replace(dist=labels[v].dist + rng.choice([-1, 1, 2]) if labels[v].dist else 1)
    else:
        v = rng.choice(path[1:])
        del labels[v]
    return _connect(n, extra, rng), labels, f


def _flow_violations(g, labels, f, with_dist: bool, anywhere: bool):
    fs = ForwardingState()
    for v, lab in labels.items():
        if lab.succ is not None:
            fs.set_rule(v, f, lab.succ)
    bad = not check_blackhole_free(fs, g, [f.source], f)
    if anywhere:
        bad |= not check_loop_free(fs, g, f)
    if with_dist:
        for v, lab in labels.items():
            ok, hops = _flow_walk_ok(labels, v, f.destination, g.n)
            bad |= not ok or hops != lab.dist
    return bad


def _tree_case(rng, kind):
    n = rng.randint(4, 10)
    parents = random_tree(n, rng)
    ver = rng.randrange(3)
    labels = prove_tree(parents, 0, ver)
    extra = {link(v, p) for v, p in parents.items() if p is not None}
    children: dict = {}
    for v, p in parents.items():
        if p is not None:
            children.setdefault(p, []).append(v)

    def below(v):
        out, stack = [], list(children.get(v, ()))
        while stack:
            u = stack.pop()
            out.append(u)
            stack.extend(children.get(u, ()))
        return out

    inner = [v for v in range(1, n) if below(v)]
    if kind == "cycle" and inner:
        v = rng.choice(inner)
        u = rng.choice(below(v))
        labels[v] = labels[v]._replace(parent=u, depth=rng.randrange(n + 1))
        extra.add(link(v, u))
    elif kind == "distance":
        v = rng.randrange(n)
        labels[v] = labels[v]._replace(depth=labels[v].depth + rng.choice([1, 2, -1]) if labels[v].depth else 1)
    elif kind == "stale":
        v = rng.randrange(1, n)
        p = labels[v].parent
        labels[p] = labels[p]._replace(version=labels[v].version - 1) if labels[v].version else labels[p]
        if not labels[v].version:
            labels[v] = labels[v]._replace(version=1)
    else:
        del labels[rng.randrange(1, n)]
    return _connect(n, extra, rng), labels


def _tree_violations(g, labels):
    fs = ForwardingState()
    for v, lab in labels.items():
        if lab.parent is not None:
            fs.set_rule(v, 0, lab.parent)
    bad = not check_loop_free(fs, g, 0) or not check_blackhole_free(fs, g, g.nodes, 0)
    # Certificate: along every parent walk the pair (version, -depth) must strictly increase.
    if 0 not in labels or labels[0].depth != 0 or labels[0].parent is not None:
        return True
    for v in labels:
        x, steps = v, 0
        while x != 0 and steps <= g.n:
            lab = labels[x]
            p = labels.get(lab.parent) if lab.parent is not None else None
            if p is None:
                return True
            if not (p.version > lab.version or (p.version == lab.version and p.depth == lab.depth - 1)):
                return True
            x, steps = lab.parent, steps + 1
        if x != 0:
            return True
    return bad


def test_criterion_8_verifier_soundness_fuzz():
    rng = random.Random(2024)
    results = {}
    flow_kinds = ["cycle", "missing", "distance"]
    for scheme, verify, with_dist, anywhere in (
        (Scheme.DIST_FLOW, verify_flow_local, True, True),
        (Scheme.PRED_SUCC, verify_predsucc_local, False, False),
    ):
        violated = caught = 0
        for i in range(1000):
            g, labels, f = _flow_case(rng, flow_kinds[i % 3])
            if _flow_violations(g, labels, f, with_dist, anywhere):
                violated += 1
                caught += not all(_verdicts(g, labels, verify).values())
        results[scheme.value] = (caught, violated)
    violated = caught = 0
    tree_kinds = ["cycle", "missing", "distance", "stale"]
    for i in range(1000):
        g, labels = _tree_case(rng, tree_kinds[i % 4])
        if _tree_violations(g, labels):
            violated += 1
            caught += not all(_verdicts(g, labels, verify_tree_local, g.nodes).values())
    results[Scheme.VERSIONED_TREE.value] = (caught, violated)
    ok = all(c == v and v > 0 for c, v in results.values())
    report(8, ok, "; ".join(f"{k}: NO in {c}/{v} violated configs" for k, (c, v) in results.items()))
    assert ok


# --- 9 ---------------------------------------------------------------------------

def _cli_trace(path: Path, seed: int | None, hashseed: str) -> str:
    env = dict(os.environ, PYTHONHASHSEED=hashseed)
    cmd = [sys.executable, "-m", "plsupdate", "run", str(path), "--emit", "trace"]
    if seed is not None:
        cmd += ["--seed", str(seed)]
    return subprocess.run(cmd, capture_output=True, text=True, env=env, cwd=ROOT).stdout


def test_criterion_9_determinism():
    files = sorted(SCENARIOS.glob("*.json"))
    mismatches = []
    checks = 0
    for f in files:
        sc = parse_scenario(f.read_text())
        for pol in (None, SeededRandomJitter(1, 3), SeededRandomJitter(2, 5)):
            a = run(sc, pol).to_jsonl()
            b = run(sc, pol).to_jsonl()
            checks += 1
            if a != b:
                mismatches.append((f.name, pol))
        x = _cli_trace(f, 7, "0")
        y = _cli_trace(f, 7, "12345")
        checks += 1
        if not x or x != y:
            mismatches.append((f.name, "cli"))
    ok = not mismatches
    report(9, ok, f"{len(files)} bundled scenarios, {checks} repeat comparisons "
                  f"(in-process and across hash seeds), {len(mismatches)} differ")
    assert ok, mismatches


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
