"""PNG contact sheet of extractions for visual inspection.

    python3 scripts/preview.py out.png hand vase star5 ...
    python3 scripts/preview.py out.png --corpus --per 2

Each panel shows 1 - v, positive (red) and negative (yellow) branches, the
center (green) and the position vectors of the first descriptor (blue).
"""

from __future__ import annotations

import argparse
import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from axisdesc import corpus
from axisdesc.grid import mask_from_foreground
from axisdesc.pipeline import ExtractParams, extract
from axisdesc.shapes import Pose, rasterize


def panel(ax, sil, pose, params, title):
    fg, _ = rasterize(sil, pose)
    mask = mask_from_foreground(fg)
    try:
        ext = extract(mask, params)
    except Exception as exc:  # noqa: BLE001 - a preview shows failures too
        ax.imshow(mask.interior, cmap="gray_r")
        ax.set_title(f"{title}\n{type(exc).__name__}", fontsize=8)
        return
    ax.imshow(np.where(mask.interior, ext.field.depth, np.nan), cmap="viridis")
    for b in ext.branches:
        rc = np.array(b.cells)
        ax.plot(rc[:, 1], rc[:, 0], "-", color="red" if b.kind == "positive" else "yellow", lw=1.5)
    d = ext.descriptors[0]
    m = ext.mask
    ocol = d.center[0] - m.offset[1]
    orow = (m.source_shape[0] - 1) - d.center[1] - m.offset[0]
    for rec in d.records:
        tx, ty = rec.termination_xy
        tcol = tx - m.offset[1]
        trow = (m.source_shape[0] - 1) - ty - m.offset[0]
        ax.plot([ocol, tcol], [orow, trow], "-", color="#2050e0", lw=0.8)
    for h in d.halves:
        if h.frame.anchor is not None:
            acol = h.frame.anchor[0] - m.offset[1]
            arow = (m.source_shape[0] - 1) - h.frame.anchor[1] - m.offset[0]
            ax.plot([ocol, acol], [orow, arow], "-", color="darkred", lw=2.5)
    for p in ext.criticals:
        ax.plot(p.cell[1], p.cell[0], "o" if p.kind == "elliptic" else "x", color="lime", ms=6)
    halves = "/".join(str(len(h.records)) for h in d.halves)
    ax.set_title(f"{title}\ntau={ext.field.time:.0f} alt={len(ext.descriptors)} rec={halves}", fontsize=8)
    ax.set_axis_off()


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("out")
    ap.add_argument("families", nargs="*")
    ap.add_argument("--corpus", action="store_true")
    ap.add_argument("--per", type=int, default=1)
    ap.add_argument("--scale", type=float, default=1.0)
    ap.add_argument("--angle", type=float, default=0.0, help="degrees")
    ap.add_argument("--target", default="center")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="extraction parameter")
    args = ap.parse_args(argv)
    items = dict(kv.split("=", 1) for kv in args.set)
    items.setdefault("target", args.target)
    params = ExtractParams.from_items(items)
    jobs = []
    if args.corpus:
        for it in corpus.corpus_items(args.per):
            if not args.families or it.category in args.families:
                jobs.append((it.silhouette, it.pose, it.shape_id))
    else:
        extra = {
            "square": corpus.square,
            "disk": corpus.disk,
            "rectangle": corpus.rectangle,
            "triangle": corpus.triangle,
            "dog_bone": corpus.dog_bone,
        }
        for name in args.families:
            fn = corpus.FAMILIES.get(name) or extra[name]
            jobs.append((fn(), Pose(args.scale, math.radians(args.angle)), name))
    n = len(jobs)
    cols = min(n, 5)
    rows = math.ceil(n / cols)
    fig, axs = plt.subplots(rows, cols, figsize=(4 * cols, 4 * rows), squeeze=False)
    for ax in axs.flat:
        ax.set_axis_off()
    for ax, (sil, pose, title) in zip(axs.flat, jobs):
        panel(ax, sil, pose, params, title)
    fig.tight_layout()
    fig.savefig(args.out, dpi=70)


if __name__ == "__main__":
    main()
