"""Exhaustive delivery-order checks over small path and tree update instances.

    python scripts/model_check.py paths --max-nodes 5
    python scripts/model_check.py trees --max-nodes 4 --walks 200
"""

import argparse
import random
import time

from plsupdate.explore import explore, random_interleaving
from plsupdate.instances import path_pair_instances, tree_pair_instances
from plsupdate.protocols import Scheme
from plsupdate.scenario import multi_tree_scenario


def check(instances):
    totals = dict(instances=0, states=0, violations=0, downgrades=0, stuck=0)
    for sc in instances:
        rep = explore(sc)
        totals["instances"] += 1
        totals["states"] += rep.states
        totals["violations"] += rep.violations
        totals["downgrades"] += rep.downgrades
        totals["stuck"] += rep.terminal_incomplete
        if not rep.clean:
            print(f"violation in {sc.name}: {rep.first_violation}")
    return totals


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("kind", choices=["paths", "trees"])
    ap.add_argument("--max-nodes", type=int, default=5)
    ap.add_argument("--scheme", default=None, help="override the default scheme")
    ap.add_argument("--walks", type=int, default=0, help="random orders on 20-node multi-version trees")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    t0 = time.perf_counter()
    if args.kind == "paths":
        scheme = Scheme(args.scheme or "DIST_FLOW")
        totals = check(path_pair_instances(args.max_nodes, scheme))
    else:
        scheme = Scheme(args.scheme or "VERSIONED_TREE")
        totals = check(tree_pair_instances(args.max_nodes, versions=1, scheme=scheme))
    print(" ".join(f"{k}={v}" for k, v in totals.items()), f"seconds={time.perf_counter() - t0:.1f}")

    if args.walks:
        bad = 0
        for i in range(args.walks):
            rng = random.Random(args.seed + i)
            w = random_interleaving(multi_tree_scenario(20, 3, rng, extra_links=rng.randrange(8)), rng)
            bad += w.violations + w.downgrades + (not w.complete)
        print(f"walks={args.walks} bad={bad}")


if __name__ == "__main__":
    main()
