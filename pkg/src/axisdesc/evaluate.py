"""Evaluation harnesses shared by ``scripts/`` and the acceptance tests."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import corpus
from .descriptor import cell_xy
from .grid import mask_from_foreground
from .matcher import MatchResult, SimilarityThresholds, match_multi
from .pipeline import ExtractParams, Extraction, extract
from .shapes import Pose, Silhouette, rasterize

INVARIANCE_SCALES = (0.5, 2.0)
INVARIANCE_ANGLES = (30.0, 90.0, 137.0)
INVARIANCE_SHIFT = (13.3, -7.7)


def extract_silhouette(sil: Silhouette, pose: Pose = Pose(), params: ExtractParams = ExtractParams()):
    """Rasterise and extract; returns the extraction and the placed pose."""
    fg, placed = rasterize(sil, pose)
    return extract(mask_from_foreground(fg), params), placed


@dataclass
class InvarianceRow:
    name: str
    scores: list[float]
    labels: list[str]

    @property
    def worst(self) -> float:
        return min(self.scores)


def invariance_suite(
    families=None,
    base_scale: float = 2.0,
    params: ExtractParams = ExtractParams(),
    thr: SimilarityThresholds = SimilarityThresholds(),
) -> list[InvarianceRow]:
    """Match each canonical shape against scaled, rotated, shifted copies.

    The original is drawn at ``base_scale``; copies at ``base_scale * s``.
    """
    rows = []
    for name in families or sorted(corpus.FAMILIES):
        sil = corpus.FAMILIES[name]()
        ref, _ = extract_silhouette(sil, Pose(base_scale), params)
        scores, labels = [], []
        for s in INVARIANCE_SCALES:
            for a in INVARIANCE_ANGLES:
                pose = Pose(base_scale * s, math.radians(a), INVARIANCE_SHIFT)
                try:
                    ext, _ = extract_silhouette(sil, pose, params)
                    score = match_multi(ref.descriptors, ext.descriptors, thr).total
                except Exception:  # noqa: BLE001 - a failed copy scores zero
                    score = 0.0
                scores.append(score)
                labels.append(f"x{s:g}@{a:g}")
        rows.append(InvarianceRow(name, scores, labels))
    return rows


@dataclass
class RetrievalReport:
    ids: list[str]
    categories: list[str]
    scores: np.ndarray
    seconds: float
    misses: list[tuple[str, str]] = field(default_factory=list)

    @property
    def rank1(self) -> float:
        return 1.0 - len(self.misses) / len(self.ids)


def retrieval(
    per_category: int = 4,
    seed: int = 0,
    params: ExtractParams = ExtractParams(),
    thr: SimilarityThresholds = SimilarityThresholds(),
) -> RetrievalReport:
    """Leave-one-out rank-1 retrieval over the generated corpus.

    Ties in score go to the smaller shape id, as in database queries.
    """
    t0 = time.perf_counter()
    items = corpus.corpus_items(per_category, seed)
    descs = []
    for it in items:
        try:
            descs.append(extract_silhouette(it.silhouette, it.pose, params)[0].descriptors)
        except Exception:  # noqa: BLE001 - an unextractable shape matches nothing
            descs.append([])
    n = len(items)
    S = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                S[i, j] = match_multi(descs[i], descs[j], thr).total
    ids = [it.shape_id for it in items]
    cats = [it.category for it in items]
    misses = []
    for i in range(n):
        j = min((k for k in range(n) if k != i), key=lambda k: (-S[i, k], ids[k]))
        if cats[j] != cats[i]:
            misses.append((ids[i], ids[j]))
    return RetrievalReport(ids, cats, S, time.perf_counter() - t0, misses)


def finger_label(ext: Extraction, placed: Pose, sil: Silhouette, branch_index: int, reach: float = 25.0):
    """Index of the finger whose tip is nearest the branch's boundary end, or
    None if no tip lies within ``reach`` (shape units)."""
    b = ext.branches[branch_index]
    x, y = cell_xy(ext.field, b.cells[0])
    best = None
    for key, (lx, ly) in sil.landmarks.items():
        if not key.endswith("_tip"):
            continue
        X, Y = placed.apply(lx, ly)
        d = math.hypot(float(X) - x, float(Y) - y)
        if best is None or d < best[0]:
            best = (d, int(key[len("finger") : -len("_tip")]))
    return best[1] if best and best[0] < reach * placed.scale else None


def labelled_pairs(a, b, res: MatchResult):
    """Finger labels of every matched pair: ``[(label_a, label_b, score)]``.

    ``a`` and ``b`` are ``(extraction, placed_pose, silhouette)`` triples.
    """
    (ea, pa, sa), (eb, pb, sb) = a, b
    da = ea.descriptors[res.alternatives[0]]
    db = eb.descriptors[res.alternatives[1]]
    ra = {r.order_index: r for r in da.records}
    rb = {r.order_index: r for r in db.records}
    return [
        (finger_label(ea, pa, sa, ra[i].branch_index), finger_label(eb, pb, sb, rb[j].branch_index), s)
        for i, j, s in res.pairs
    ]
