"""Enumerators for small model-checking instances."""

from __future__ import annotations

import itertools

from .protocols import FlowRoutes, Scheme, TreeRoutes
from .scenario import Scenario
from .topology import build_graph


def simple_paths(inner: list, src, dst, max_inner: int | None = None):
    """Every simple path src -> ... -> dst through distinct nodes of ``inner``."""
    top = len(inner) if max_inner is None else min(max_inner, len(inner))
    for k in range(top + 1):
        for mid in itertools.permutations(inner, k):
            yield (src,) + mid + (dst,)


def _canonical(old, new):
    order = {}
    for v in old + new:
        order.setdefault(v, len(order))
    return tuple(order[v] for v in old), tuple(order[v] for v in new)


def path_pair_instances(max_nodes: int = 6, scheme: Scheme = Scheme.DIST_FLOW):
    """One scenario per old/new path pair on at most ``max_nodes`` nodes, up to relabeling.

    The graph is the union of both paths: extra links would only add
    announcements to nodes the flow never consults.
    """
    src, dst = 0, max_nodes - 1
    inner = list(range(1, max_nodes - 1))
    seen = set()
    for old in simple_paths(inner, src, dst):
        for new in simple_paths(inner, src, dst):
            o, n = _canonical(old, new)
            if (o, n) in seen:
                continue
            seen.add((o, n))
            nodes = max(o + n) + 1
            edges = {tuple(sorted(e)) for p in (o, n) for e in zip(p, p[1:])}
            g = build_graph(nodes, sorted(edges), controller_site=o[-1])
            routes = FlowRoutes(o[0], o[-1], o, n)
            yield Scenario(g, scheme, routes, name=f"paths_{'-'.join(map(str, o))}_{'-'.join(map(str, n))}")


def labeled_trees(n: int, root: int = 0):
    """Every spanning tree on nodes 0..n-1 as a parent map rooted at ``root``.

    Parent maps where following parents always reaches the root; n^(n-2)
    of them for n >= 2.
    """
    others = [v for v in range(n) if v != root]
    for choice in itertools.product(range(n), repeat=len(others)):
        parents = {root: None}
        ok = True
        for v, p in zip(others, choice):
            if p == v:
                ok = False
                break
            parents[v] = p
        if not ok:
            continue
        if all(_reaches(parents, v, root) for v in others):
            yield parents


def _reaches(parents, v, root):
    seen = set()
    while v != root:
        if v in seen:
            return False
        seen.add(v)
        v = parents[v]
    return True


def _tree_canonical(combo, perms):
    """Smallest encoding of a tuple of parent maps over relabelings fixing the root."""
    best = None
    for perm in perms:
        enc = tuple(
            tuple(sorted((perm[v], None if p is None else perm[p]) for v, p in t.items()))
            for t in combo
        )
        if best is None or enc < best:
            best = enc
    return best


def tree_pair_instances(max_nodes: int = 5, versions: int = 1, scheme: Scheme = Scheme.VERSIONED_TREE,
                        min_nodes: int = 2, up_to_relabeling: bool = True):
    """Old tree plus ``versions`` successive new trees over the union graph.

    Covers every tuple of labeled trees on n <= max_nodes nodes rooted at 0,
    one representative per relabeling class of the non-root nodes.
    """
    for n in range(min_nodes, max_nodes + 1):
        trees = list(labeled_trees(n))
        perms = [(0,) + p for p in itertools.permutations(range(1, n))]
        seen = set()
        for combo in itertools.product(trees, repeat=versions + 1):
            if up_to_relabeling:
                c = _tree_canonical(combo, perms)
                if c in seen:
                    continue
                seen.add(c)
            edges = set()
            for t in combo:
                for v, p in t.items():
                    if p is not None:
                        edges.add(tuple(sorted((v, p))))
            g = build_graph(n, sorted(edges), controller_site=0)
            routes = TreeRoutes.make(0, combo[0], [(i + 1, combo[i + 1]) for i in range(versions)])
            yield Scenario(g, scheme, routes, name=f"trees_n{n}")
