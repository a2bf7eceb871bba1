from __future__ import annotations

import sys
from pathlib import Path

import pytest
from hypothesis import settings
from hypothesis import strategies as st

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"

sys.path.insert(0, str(Path(__file__).resolve().parent))


@pytest.fixture
def scenario_dir() -> Path:
    return SCENARIOS


@st.composite
def connected_graphs(draw, min_nodes=2, max_nodes=9):
    """(n, links) for a connected simple graph: a random spanning tree plus chords."""
    n = draw(st.integers(min_nodes, max_nodes))
    links = set()
    for v in range(1, n):
        p = draw(st.integers(0, v - 1))
        links.add((p, v))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n) if (u, v) not in links]
    if pairs:
        extra = draw(st.lists(st.sampled_from(pairs), max_size=len(pairs), unique=True))
        links.update(extra)
    return n, sorted(links)
