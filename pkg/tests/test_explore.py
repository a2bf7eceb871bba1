from __future__ import annotations

import math
import random

import pytest

from plsupdate.explore import ExplosionGuard, enumerate_interleavings, explore, random_interleaving
from plsupdate.instances import _canonical, labeled_trees, path_pair_instances, simple_paths, tree_pair_instances
from plsupdate.protocols import FlowRoutes, Scheme, TreeRoutes
from plsupdate.scenario import Scenario, multi_tree_scenario, path_scenario
from plsupdate.topology import build_graph


def identity2():
    g = build_graph(2, [(0, 1)], controller_site=0)
    return Scenario(g, Scheme.DIST_FLOW, FlowRoutes(0, 1, (0, 1), (0, 1), 0, 0), name="identity2")


def detour4(scheme=Scheme.DIST_FLOW):
    # Old route s -> d directly, new route s -> a -> b -> d.
    g = build_graph(4, [(0, 3), (0, 1), (1, 2), (2, 3)], controller_site=3)
    return Scenario(g, scheme, FlowRoutes(0, 3, (0, 3), (0, 1, 2, 3)), name="detour4")


def always_open(scheme, st, label):
    return ()


def test_two_messages_two_orders():
    traces = list(enumerate_interleavings(identity2()))
    assert len(traces) == 2
    firsts = {t.rows[0]["event"]["msg"]["dst"] for t in traces}
    assert firsts == {0, 1}
    assert all(t.complete and t.violations == 0 for t in traces)


def test_enumeration_and_merged_exploration_agree_on_path4():
    sc = path_scenario(4, Scheme.DIST_FLOW)
    traces = list(enumerate_interleavings(sc))
    rep = explore(sc)
    assert traces and all(t.violations == 0 and t.complete for t in traces)
    assert rep.clean and rep.terminal_incomplete == 0
    assert rep.states < len(traces) * 10


def test_broken_gate_mutant_opens_blackhole():
    rep = explore(detour4(), gate=always_open)
    assert rep.violations > 0
    assert rep.first_violation["oracle"]["blackhole"] is False


def test_real_gate_on_same_instance_is_clean():
    rep = explore(detour4())
    assert rep.clean and rep.terminal_incomplete == 0


def test_predsucc_every_order_deadlocks():
    rep = explore(path_scenario(4, Scheme.PRED_SUCC))
    assert rep.violations == 0
    assert rep.terminal > 0 and rep.terminal_incomplete == rep.terminal


def test_naive_full_finds_loop_on_triangle():
    g = build_graph(3, [(0, 1), (1, 2), (0, 2)], controller_site=0)
    old = {0: None, 1: 2, 2: 0}
    new = {0: None, 1: 0, 2: 1}
    routes = TreeRoutes.make(0, old, [(1, new)])
    assert explore(Scenario(g, Scheme.NAIVE_FULL, routes)).violations > 0
    assert explore(Scenario(g, Scheme.VERSIONED_TREE, routes)).clean


def test_explosion_guard():
    with pytest.raises(ExplosionGuard):
        list(enumerate_interleavings(path_scenario(4, Scheme.DIST_FLOW), cap=3))
    with pytest.raises(ExplosionGuard):
        explore(path_scenario(4, Scheme.DIST_FLOW), max_states=5)


def test_random_interleavings_on_trees():
    rng = random.Random(1)
    for _ in range(20):
        sc = multi_tree_scenario(10, 2, rng, extra_links=2)
        w = random_interleaving(sc, rng)
        assert w.complete and w.violations == 0 and w.downgrades == 0


# --- instance enumerators -----------------------------------------------------------

def test_simple_path_count():
    # Paths 0 -> 5 through any ordered subset of 4 inner nodes.
    expect = sum(math.perm(4, k) for k in range(5))
    assert len(list(simple_paths([1, 2, 3, 4], 0, 5))) == expect


def test_canonical_is_relabeling_invariant():
    assert _canonical((0, 3, 5), (0, 4, 5)) == _canonical((0, 2, 5), (0, 1, 5))


def test_path_pairs_small():
    names = [sc.name for sc in path_pair_instances(3)]
    # Paths 0-2 or 0-1-2, both old and new.
    assert len(names) == 4


def test_labeled_tree_count_is_cayley():
    for n in range(2, 6):
        assert sum(1 for _ in labeled_trees(n)) == n ** (n - 2)


def test_tree_pairs_cover_each_class_once():
    full = list(tree_pair_instances(3, versions=1, up_to_relabeling=False))
    reduced = list(tree_pair_instances(3, versions=1))
    assert len(full) == 1 + 9 and len(reduced) < len(full)
