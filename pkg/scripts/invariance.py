"""Similarity of each canonical shape to its scaled/rotated/shifted copies.

    python3 scripts/invariance.py [families...] [--base-scale 2] [--set KEY=VALUE]
"""

from __future__ import annotations

import argparse
import time

from axisdesc.evaluate import invariance_suite
from axisdesc.pipeline import ExtractParams


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("families", nargs="*")
    ap.add_argument("--base-scale", type=float, default=2.0)
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="extraction parameter")
    args = ap.parse_args(argv)
    params = ExtractParams.from_items(dict(kv.split("=", 1) for kv in args.set))
    t = time.perf_counter()
    rows = invariance_suite(args.families or None, args.base_scale, params)
    print(f"{'shape':<10} {'worst':>6}  " + " ".join(f"{lab:>8}" for lab in rows[0].labels))
    for r in rows:
        print(f"{r.name:<10} {r.worst:6.3f}  " + " ".join(f"{s:8.3f}" for s in r.scores))
    scores = [s for r in rows for s in r.scores]
    full = sum(r.worst >= 0.95 for r in rows)
    print(f"\nshapes with every copy >= 0.95: {full}/{len(rows)}; copies >= 0.95: "
          f"{sum(s >= 0.95 for s in scores)}/{len(scores)}; mean {sum(scores) / len(scores):.3f}; "
          f"{time.perf_counter() - t:.0f}s")


if __name__ == "__main__":
    main()
