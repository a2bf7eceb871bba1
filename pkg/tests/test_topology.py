from __future__ import annotations

import networkx as nx
import pytest
from conftest import connected_graphs
from hypothesis import given
from hypothesis import strategies as st

from plsupdate.topology import (
    DisconnectedGraph,
    DuplicateLink,
    SelfLoop,
    UnknownNode,
    all_distances,
    build_graph,
    hop_distance,
    link,
    neighbors,
)


def test_two_node_link():
    g = build_graph(2, [(0, 1)])
    assert g.n == 2
    assert neighbors(g, 0) == {1}
    assert hop_distance(g, 0, 1) == 1


def test_ring_distance():
    g = build_graph(6, [(i, (i + 1) % 6) for i in range(6)])
    assert hop_distance(g, 0, 3) == 3
    assert hop_distance(g, 0, 5) == 1


@pytest.mark.parametrize(
    "n, links, exc",
    [
        (3, [(0, 1)], DisconnectedGraph),
        (2, [(0, 0), (0, 1)], SelfLoop),
        (2, [(0, 1), (1, 0)], DuplicateLink),
        (2, [(0, 2)], UnknownNode),
    ],
)
def test_rejects_bad_graphs(n, links, exc):
    with pytest.raises(exc):
        build_graph(n, links)


def test_unknown_controller_site():
    with pytest.raises(UnknownNode):
        build_graph(2, [(0, 1)], controller_site=5)


def test_failed_link_cuts_path():
    g = build_graph(3, [(0, 1), (1, 2)])
    assert hop_distance(g, 0, 2, failed=frozenset({link(1, 2)})) is None


@given(connected_graphs())
def test_distances_match_networkx(spec):
    n, links = spec
    g = build_graph(n, links)
    ref = nx.Graph()
    ref.add_nodes_from(range(n))
    ref.add_edges_from(links)
    for s in range(n):
        assert all_distances(g, s) == dict(nx.single_source_shortest_path_length(ref, s))


@given(connected_graphs(), st.data())
def test_neighbors_symmetric(spec, data):
    n, links = spec
    g = build_graph(n, links)
    v = data.draw(st.integers(0, n - 1))
    for w in neighbors(g, v):
        assert v in neighbors(g, w)
        assert hop_distance(g, v, w) == 1
