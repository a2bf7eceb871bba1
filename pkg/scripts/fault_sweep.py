"""Single-link failure sweep on the bundled two-tree network."""

import sys
from pathlib import Path

from plsupdate.faults import sweep_single_failures, two_tree_instance
from plsupdate.scenario import parse_scenario

DEFAULT = Path(__file__).resolve().parent.parent / "scenarios" / "two_trees8.json"


def main():
    path = Path(sys.argv[1]) if len(sys.argv) > 1 else DEFAULT
    g, labels, primary = two_tree_instance(parse_scenario(path.read_text()))
    for trees, name in ((labels, "both trees"), ({primary.version: labels[primary.version]}, "primary only")):
        print(f"# {name}")
        for o in sweep_single_failures(g, trees, primary):
            drops = sorted(v for v, x in o.outcomes.items() if type(x).__name__ != "Delivered")
            print(f"link {o.link}: delivered={o.all_delivered} not_delivered={drops} alarms={sorted(o.alarms)}")


if __name__ == "__main__":
    main()
