"""Completion delay of the central baseline vs. distributed flow updates on ring chains.

    python scripts/run_speedup.py --lengths 8,16,32,64,128 --workers 4
"""

import argparse

from plsupdate.metrics import fit, speedup_curve


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lengths", default="8,16,32,64,128")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    lengths = [int(x) for x in args.lengths.split(",")]
    table = speedup_curve(lengths, workers=args.workers)
    print(table.text(), end="")
    central = [r[1] for r in table.rows]
    dist = [r[2] for r in table.rows]
    print(f"# central delay quadratic R^2={fit(lengths, central, 2)['r2']:.4f}")
    print(f"# distributed delay linear R^2={fit(lengths, dist, 1)['r2']:.4f}")


if __name__ == "__main__":
    main()
