"""Leave-one-out retrieval on the generated corpus.

    python3 scripts/retrieval.py [--per 4] [--seed 0] [--set KEY=VALUE] [--matrix out.npy]
"""

from __future__ import annotations

import argparse
from collections import Counter

import numpy as np

from axisdesc.evaluate import retrieval
from axisdesc.pipeline import ExtractParams


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--per", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="extraction parameter")
    ap.add_argument("--matrix", help="save the similarity matrix here (.npy)")
    args = ap.parse_args(argv)
    params = ExtractParams.from_items(dict(kv.split("=", 1) for kv in args.set))
    rep = retrieval(args.per, args.seed, params)
    n = len(rep.ids)
    print(f"rank-1 same category: {n - len(rep.misses)}/{n} = {rep.rank1:.1%} in {rep.seconds:.0f}s")
    for q, hit in rep.misses:
        print(f"  miss {q} -> {hit}")
    # how many of the other members of its category each query ranks above every outsider
    top = Counter()
    for i in range(n):
        order = sorted((j for j in range(n) if j != i), key=lambda j: (-rep.scores[i, j], rep.ids[j]))
        k = next((r for r, j in enumerate(order) if rep.categories[j] != rep.categories[i]), n - 1)
        top[k] += 1
    print("same-category run before the first outsider:", dict(sorted(top.items())))
    if args.matrix:
        np.save(args.matrix, rep.scores)


if __name__ == "__main__":
    main()
