"""Branch similarity and order-preserving branch-and-bound matching.

The total similarity of two descriptors is the length-weighted sum of the
scores of matched branch pairs: a pair weighs the mean of its two normalised
lengths, unmatched branches contribute nothing. Matching runs per half; each
half of one shape is paired with a half of the other and both pairings are
tried.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

from .descriptor import BranchRecord, ShapeDescriptor

Mode = Literal["invariant", "variant"]
# pruning slack: bounds are inflated by this relative margin so that float
# rounding in the running sums can never discard the optimum
_SLACK = 1e-9


@dataclass(frozen=True)
class SimilarityThresholds:
    r_thr: float = 0.5
    theta_thr: float = math.pi / 2
    len_thr: float = 0.5

    def __post_init__(self):
        if not (self.r_thr > 0 and self.theta_thr > 0 and self.len_thr > 0):
            raise ValueError("similarity thresholds must be strictly positive")


@dataclass(frozen=True)
class MatchResult:
    pairs: tuple[tuple[int, int, float], ...]
    unmatched_a: tuple[int, ...]
    unmatched_b: tuple[int, ...]
    total: float
    mode: Mode = "invariant"
    half_pairing: tuple[int, int] = (0, 1)
    alternatives: tuple[int, int] = (0, 0)
    nodes: int = field(default=0, compare=False)


def feature_similarity(f0: float, f1: float, f_thr: float) -> float:
    if not f_thr > 0:
        raise ValueError("f_thr must be positive")
    return max(1.0 - abs(f0 - f1) / f_thr, 0.0)


def branch_similarity(a: BranchRecord, b: BranchRecord, thr: SimilarityThresholds = SimilarityThresholds()) -> float:
    """Mean of the r, theta and length scores; zero if any of them is zero."""
    if a.kind != b.kind:
        return 0.0
    s_r = feature_similarity(a.r, b.r, thr.r_thr)
    s_t = feature_similarity(a.theta, b.theta, thr.theta_thr)
    s_l = feature_similarity(a.norm_length, b.norm_length, thr.len_thr)
    if s_r == 0.0 or s_t == 0.0 or s_l == 0.0:
        return 0.0
    return (s_r + s_t + s_l) / 3.0


def pair_weight(a: BranchRecord, b: BranchRecord) -> float:
    return (a.norm_length + b.norm_length) / 2.0


def _gains(ra, rb, thr):
    scores = [[branch_similarity(a, b, thr) for b in rb] for a in ra]
    gains = [[pair_weight(a, b) * s for b, s in zip(rb, row)] for a, row in zip(ra, scores)]
    return scores, gains


def _suffix_optimum(gains, n, m):
    """opt[i][j]: best order-preserving gain of records i.. against j.. (DP)."""
    opt = [[0.0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, nxt, g = opt[i], opt[i + 1], gains[i]
        for j in range(m - 1, -1, -1):
            row[j] = max(nxt[j], row[j + 1], g[j] + nxt[j + 1] if g[j] > 0 else 0.0)
    return opt


def match_half(ra, rb, thr: SimilarityThresholds = SimilarityThresholds()):
    """Best order-preserving partial matching of two theta-sorted record lists.

    Depth-first branch and bound over the records of ``ra``: each is either
    paired with a later record of ``rb`` than the previous pair or left
    unmatched. The optimistic remainder of a node is the exact optimum of the
    remaining sub-problem, tabulated once by dynamic programming, so only
    paths within rounding slack of the optimum are expanded. Equal totals go
    to the lexicographically smallest pair list. Returns
    ``(pairs, gain, nodes)`` with pairs as ``(i, j)`` positions.
    """
    n, m = len(ra), len(rb)
    if n == 0 or m == 0:
        return [], 0.0, 1
    _, gains = _gains(ra, rb, thr)
    opt = _suffix_optimum(gains, n, m)
    cand = [sorted((j for j in range(m) if gains[i][j] > 0), key=lambda j: (-gains[i][j], j)) for i in range(n)]

    inc_pairs: list[tuple[int, int]] = []
    inc_total = 0.0
    nodes = 0
    chosen: list[tuple[int, int]] = []

    def visit(i, j0, running):
        nonlocal inc_pairs, inc_total, nodes
        nodes += 1
        if i == n:
            total = math.fsum(gains[a][b] for a, b in chosen)
            if total > inc_total or (total == inc_total and chosen < inc_pairs):
                inc_total, inc_pairs = total, list(chosen)
            return
        if (running + opt[i][j0]) * (1 + _SLACK) + 1e-15 <= inc_total:
            return
        for j in cand[i]:
            if j < j0:
                continue
            chosen.append((i, j))
            visit(i + 1, j + 1, running + gains[i][j])
            chosen.pop()
        visit(i + 1, j0, running)

    visit(0, 0, 0.0)
    return inc_pairs, inc_total, nodes


def exhaustive_half(ra, rb, thr: SimilarityThresholds = SimilarityThresholds()):
    """Reference solver: enumerate every order-preserving partial matching.

    Same tie rule as :func:`match_half`.
    """
    n, m = len(ra), len(rb)
    _, gains = _gains(ra, rb, thr)
    best_pairs: list = []
    best_total = 0.0

    def rec(i, j0, chosen):
        nonlocal best_pairs, best_total
        if i == n:
            total = math.fsum(gains[a][b] for a, b in chosen)
            if total > best_total or (total == best_total and chosen < best_pairs):
                best_total, best_pairs = total, list(chosen)
            return
        rec(i + 1, j0, chosen)
        for j in range(j0, m):
            if gains[i][j] > 0:
                chosen.append((i, j))
                rec(i + 1, j + 1, chosen)
                chosen.pop()

    rec(0, 0, [])
    return best_pairs, best_total


def _variant_factor(A: ShapeDescriptor, B: ShapeDescriptor) -> float:
    (a0, a1), (b0, b1) = A.orientation, B.orientation
    na, nb = math.hypot(a0, a1), math.hypot(b0, b1)
    if na == 0 or nb == 0:
        d_orient = math.pi
    else:
        d_orient = math.acos(max(-1.0, min(1.0, (a0 * b0 + a1 * b1) / (na * nb))))
    f_orient = max(1.0 - d_orient / math.pi, 0.0)
    if A.total_axes_length > 0 and B.total_axes_length > 0:
        f_scale = max(1.0 - abs(math.log(A.total_axes_length / B.total_axes_length)) / math.log(2.0), 0.0)
    else:
        f_scale = 0.0
    return f_orient * f_scale


def _half_key(records):
    return tuple((r.kind, r.r, r.theta, r.norm_length) for r in records)


def match_shapes(
    A: ShapeDescriptor,
    B: ShapeDescriptor,
    thr: SimilarityThresholds = SimilarityThresholds(),
    mode: Mode = "invariant",
    solver=match_half,
    cache: dict | None = None,
) -> MatchResult:
    """Best total similarity of two descriptors over both half pairings.

    ``cache`` maps half contents to solver output and lets alternatives that
    share halves skip repeated searches.
    """
    if mode not in ("invariant", "variant"):
        raise ValueError(f"unknown mode {mode!r}")
    best = None
    for hp in ((0, 1), (1, 0)):
        pairs, gains, nodes = [], [], 0
        for ha, hb in zip((0, 1), hp):
            ra, rb = A.halves[ha].records, B.halves[hb].records
            if cache is None:
                res = solver(ra, rb, thr)
            else:
                key = (_half_key(ra), _half_key(rb))
                res = cache.get(key)
                if res is None:
                    res = cache[key] = solver(ra, rb, thr)
            if len(res) == 3:
                hp_pairs, _, k = res
                nodes += k
            else:
                hp_pairs, _ = res
            for i, j in hp_pairs:
                s = branch_similarity(ra[i], rb[j], thr)
                pairs.append((ra[i].order_index, rb[j].order_index, s))
                gains.append(pair_weight(ra[i], rb[j]) * s)
        total = math.fsum(gains)
        if best is None or total > best[0]:
            best = (total, hp, pairs, nodes)
        else:
            best = (best[0], best[1], best[2], best[3] + nodes)
    total, hp, pairs, nodes = best
    if mode == "variant":
        total *= _variant_factor(A, B)
    total = min(max(total, 0.0), 1.0)
    pairs.sort()
    ma = {p[0] for p in pairs}
    mb = {p[1] for p in pairs}
    return MatchResult(
        tuple(pairs),
        tuple(r.order_index for r in A.records if r.order_index not in ma),
        tuple(r.order_index for r in B.records if r.order_index not in mb),
        total,
        mode,
        hp,
        nodes=nodes,
    )


def match_multi(
    A_set: list[ShapeDescriptor],
    B_set: list[ShapeDescriptor],
    thr: SimilarityThresholds = SimilarityThresholds(),
    mode: Mode = "invariant",
) -> MatchResult:
    """Best match over every pair of descriptor alternatives."""
    if not A_set or not B_set:
        return MatchResult((), (), (), 0.0, mode)
    best = None
    cache: dict = {}
    for ia, A in enumerate(A_set):
        for ib, B in enumerate(B_set):
            res = match_shapes(A, B, thr, mode, cache=cache)
            if best is None or res.total > best.total:
                best = MatchResult(
                    res.pairs, res.unmatched_a, res.unmatched_b, res.total, mode, res.half_pairing, (ia, ib), res.nodes
                )
    return best
