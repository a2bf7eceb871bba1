"""Regenerate the bundled scenario files under scenarios/."""

import json
import random
import sys
from dataclasses import replace
from pathlib import Path

from plsupdate.faults import two_tree_scenario
from plsupdate.protocols import FlowRoutes, Scheme, TreeRoutes
from plsupdate.scenario import (
    Faults,
    Scenario,
    SeededRandomJitter,
    emit_scenario,
    multi_tree_scenario,
    path_scenario,
)
from plsupdate.topology import build_graph

OUT = Path(__file__).resolve().parent.parent / "scenarios"


def fig1_stanza(l, scheme):
    return {"name": f"fig1_l{l}_{scheme.lower()}", "scheme": scheme, "generator": {"name": "fig1_chain", "l": l}}


def bundled() -> dict:
    out = {}
    g2 = build_graph(2, [(0, 1)], controller_site=0)
    out["identity2_distflow.json"] = emit_scenario(
        Scenario(g2, Scheme.DIST_FLOW, FlowRoutes(0, 1, (0, 1), (0, 1), 0, 0), name="identity2_distflow")
    )
    out["path4_distflow.json"] = emit_scenario(path_scenario(4, Scheme.DIST_FLOW))
    out["path5_predsucc.json"] = emit_scenario(path_scenario(5, Scheme.PRED_SUCC))
    out["path3_predsucc.json"] = emit_scenario(path_scenario(3, Scheme.PRED_SUCC))
    for scheme in ("DIST_FLOW", "CENTRAL_BASELINE", "VERSIONED_TREE", "NAIVE_FULL"):
        name = f"fig1_l10_{scheme.lower().replace('_baseline', '').replace('_', '')}.json"
        out[name] = json.dumps(fig1_stanza(10, scheme), indent=2, sort_keys=True) + "\n"

    rng = random.Random(7)
    sc = multi_tree_scenario(20, 3, rng, extra_links=6)
    lost = tuple((v, 2) for v in range(1, 20, 3))
    sc = replace(sc, name="trees20_v3_lost_v2", policy=SeededRandomJitter(11, 4), faults=Faults((), lost))
    out["trees20_v3_lost_v2.json"] = emit_scenario(sc)

    # Line 0-1-2-3 toward 0 with a pendant leaf 4 on node 2; the leaf's only link fails mid-update.
    g = build_graph(5, [(0, 1), (1, 2), (2, 3), (2, 4)], controller_site=0)
    tree = {0: None, 1: 0, 2: 1, 3: 2, 4: 2}
    routes = TreeRoutes.make(0, tree, [(1, tree)])
    sc = Scenario(g, Scheme.VERSIONED_TREE, routes, faults=Faults(((2, 4, 30),), ()), name="leaf_failure_tree")
    out["leaf_failure_tree.json"] = emit_scenario(sc)
    out["two_trees8.json"] = emit_scenario(two_tree_scenario())
    return out


def main():
    OUT.mkdir(exist_ok=True)
    for name, text in bundled().items():
        (OUT / name).write_text(text)
        print(f"wrote {OUT / name}", file=sys.stderr)


if __name__ == "__main__":
    main()
