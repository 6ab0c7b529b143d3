"""Positive / negative symmetry points, their grouping into branches, pruning.

A positive point is a cell where |grad v| is a strict local minimum along the
level-curve tangent (a protrusion: high level-curve curvature); a negative
point is a strict local maximum (an indentation).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import ndimage

from .field import CriticalPoint, Field
from .grid import EIGHT, RING

Kind = Literal["positive", "negative"]

DEGENERACY = 1e-6
# thresholds below are fractions of sqrt(area) so they scale with the shape
MIN_LENGTH_FRACTION = 0.06
CENTER_EPS = 0.1
CONTRAST = 10.0
# symmetry points closer than this to the outline are raster noise
MARGIN_FRACTION = 0.035
GAP_FRACTION = 0.12
BRIDGE_ANGLE = math.radians(30.0)
# a chain is cut where it turns by this much or more (a corner or T junction)
FORK_BEND = math.radians(45.0)


@dataclass(frozen=True)
class SymmetryPoint:
    cell: tuple[int, int]
    kind: Kind
    strength: float


@dataclass(frozen=True, eq=False)
class SymmetryBranch:
    """An 8-connected chain, boundary end first and deep end last."""

    points: tuple[SymmetryPoint, ...]
    kind: Kind
    length: float
    depths: tuple[float, ...] = ()

    @property
    def cells(self) -> list[tuple[int, int]]:
        return [p.cell for p in self.points]

    @property
    def termination(self) -> tuple[int, int]:
        return self.points[-1].cell

    @property
    def start(self) -> tuple[int, int]:
        return self.points[0].cell

    @property
    def deep_depth(self) -> float:
        """1 - v at the deep end."""
        return self.depths[-1]

    def key(self):
        return (self.kind, tuple(self.cells))


def _central(a: np.ndarray):
    dr = np.zeros_like(a)
    dc = np.zeros_like(a)
    dr[1:-1, :] = (a[2:, :] - a[:-2, :]) / 2.0
    dc[:, 1:-1] = (a[:, 2:] - a[:, :-2]) / 2.0
    return dr, dc


def gradient_magnitude(field: Field):
    """Central-difference gradient of v, as (d/drow, d/dcol, |grad|).

    Differences are taken on the depth 1 - v, which keeps full precision
    when v is close to 1.
    """
    gr, gc = _central(-field.depth)
    return gr, gc, np.hypot(gr, gc)


def eligible_cells(field: Field, margin: int = 2) -> np.ndarray:
    """Non-boundary cells at least ``margin`` 8-steps away from the boundary."""
    return ndimage.binary_erosion(field.mask.inner, EIGHT, iterations=margin, border_value=0)


@dataclass(frozen=True)
class SymmetryMaps:
    positive: np.ndarray
    negative: np.ndarray
    strength: np.ndarray
    slope: np.ndarray
    curvature: np.ndarray


def symmetry_maps(
    field: Field,
    degeneracy: float = DEGENERACY,
    contrast: float = CONTRAST,
    margin_fraction: float = MARGIN_FRACTION,
) -> SymmetryMaps:
    """Cells where |grad v| is extremal along the level curve through them.

    ``slope`` is the derivative of g = |grad v| along the unit level-curve
    tangent t = rot90(grad v) / g, and ``curvature`` the derivative of
    ``slope`` along t, i.e. the second arc-length derivative of g on the
    level curve. Points are zero crossings of ``slope`` (the cell of a
    sign-changing 4-neighbour pair closer to zero). They are positive where
    ``curvature > 0`` (a minimum of g) and negative where it is below zero;
    ``|curvature| / g * area`` must exceed ``contrast``, which keeps the test
    scale-free and rejects the flat ripples of near-circular level curves.
    """
    gr, gc, g = gradient_magnitude(field)
    ok = eligible_cells(field)
    shape = g.shape
    empty = np.zeros(shape, dtype=bool)
    if not ok.any():
        z = np.zeros(shape)
        return SymmetryMaps(empty, empty.copy(), g, z, z)
    ok &= g > degeneracy * g[ok].max()
    if margin_fraction > 0:
        dist = ndimage.distance_transform_edt(field.mask.interior)
        ok &= dist >= margin_fraction * math.sqrt(field.mask.area)
    safe = np.where(ok, g, 1.0)
    tr = np.where(ok, -gc / safe, 0.0)
    tc = np.where(ok, gr / safe, 0.0)
    g_r, g_c = _central(g)
    slope = g_r * tr + g_c * tc
    s_r, s_c = _central(slope)
    curv = s_r * tr + s_c * tc

    zc = ok & (slope == 0.0)
    for axis in (0, 1):
        a = np.swapaxes(slope, 0, axis)
        o = np.swapaxes(ok, 0, axis)
        z = np.swapaxes(zc, 0, axis)
        flip = (a[:-1] * a[1:] < 0) & o[:-1] & o[1:]
        near_lo = np.abs(a[:-1]) <= np.abs(a[1:])
        z[:-1] |= flip & near_lo
        z[1:] |= flip & ~near_lo
    score = np.where(ok, curv / safe, 0.0) * field.mask.area
    pos = zc & (score > contrast)
    neg = zc & (score < -contrast)
    return SymmetryMaps(pos, neg, g, slope, curv)


def detect_symmetry_points(
    field: Field,
    degeneracy: float = DEGENERACY,
    contrast: float = CONTRAST,
    margin_fraction: float = MARGIN_FRACTION,
) -> list[SymmetryPoint]:
    maps = symmetry_maps(field, degeneracy, contrast, margin_fraction)
    out = []
    for kind, m in (("positive", maps.positive), ("negative", maps.negative)):
        for r, c in np.argwhere(m):
            out.append(SymmetryPoint((int(r), int(c)), kind, float(maps.strength[r, c])))
    out.sort(key=lambda p: p.cell)
    return out


# --------------------------------------------------------------------------
# grouping


def _step(a, b):
    return math.sqrt(2.0) if a[0] != b[0] and a[1] != b[1] else 1.0


def path_length(cells) -> float:
    return float(sum(_step(a, b) for a, b in zip(cells, cells[1:])))


def _adjacency(pixels: set):
    """8-adjacency with diagonal links dropped where a 4-path already exists."""
    adj = {p: set() for p in pixels}
    for p in pixels:
        r, c = p
        for dr, dc in RING:
            q = (r + dr, c + dc)
            if q not in pixels:
                continue
            if dr and dc and ((r + dr, c) in pixels or (r, c + dc) in pixels):
                continue
            adj[p].add(q)
    return adj


def _segments(adj):
    """Split a pixel graph into simple paths between nodes of degree != 2."""
    nodes = {p for p, n in adj.items() if len(n) != 2}
    seen_edges = set()
    segs = []
    for s in sorted(nodes):
        for q in sorted(adj[s]):
            if (s, q) in seen_edges:
                continue
            path = [s, q]
            seen_edges.add((s, q))
            seen_edges.add((q, s))
            prev, cur = s, q
            while cur not in nodes:
                nxt = min(n for n in adj[cur] if n != prev)
                seen_edges.add((cur, nxt))
                seen_edges.add((nxt, cur))
                path.append(nxt)
                prev, cur = cur, nxt
            segs.append(path)
    # isolated pixels and closed loops
    for s in sorted(nodes):
        if not adj[s]:
            segs.append([s])
    covered = {p for seg in segs for p in seg}
    for p in sorted(adj):
        if p in covered:
            continue
        loop = [p]
        covered.add(p)
        prev, cur = None, p
        while True:
            nxt = [n for n in sorted(adj[cur]) if n != prev and n not in covered]
            if not nxt:
                break
            prev, cur = cur, nxt[0]
            loop.append(cur)
            covered.add(cur)
        segs.append(loop)
    return segs


# ring of the 8 neighbours, clockwise from north-west
_RING = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))


def _simple_table() -> np.ndarray:
    """``table[code]`` is True when deleting the centre pixel keeps the local
    topology (one 8-connected foreground piece, one 4-connected background
    piece touching the centre). ``code`` packs the ring bits in ``_RING`` order."""
    table = np.zeros(256, dtype=bool)
    for code in range(256):
        fg = np.zeros((3, 3), dtype=bool)
        for k, (dr, dc) in enumerate(_RING):
            fg[1 + dr, 1 + dc] = (code >> k) & 1
        _, n_fg = ndimage.label(fg, structure=np.ones((3, 3)))
        bg = ~fg
        bg[1, 1] = False
        lab, _ = ndimage.label(bg)
        touching = {lab[1 + dr, 1 + dc] for dr, dc in ((-1, 0), (0, 1), (1, 0), (0, -1))} - {0}
        table[code] = n_fg == 1 and len(touching) == 1
    return table


_SIMPLE = _simple_table()


def thin(cells, depth: np.ndarray) -> set:
    """Homotopic thinning of a pixel set to one-pixel-wide traces.

    Simple pixels that are not trace ends are deleted shallowest first,
    sweeping until nothing changes. The result depends only on depth values
    and local topology, never on scan direction, so rotating the input by
    90 degrees rotates the output (up to exact depth ties).
    """
    pix = {tuple(map(int, c)) for c in cells}

    def code(p):
        return sum(1 << k for k, (dr, dc) in enumerate(_RING) if (p[0] + dr, p[1] + dc) in pix)

    changed = True
    while changed:
        changed = False
        for p in sorted(pix, key=lambda c: (_level(depth[c]), c)):
            c = code(p)
            if c & (c - 1) and _SIMPLE[c]:
                pix.discard(p)
                changed = True
    return pix


def _remove_spurs(pixels: set, spur_length: float) -> set:
    """Strip end segments shorter than ``spur_length`` that hang off a junction."""
    pixels = set(pixels)
    while True:
        adj = _adjacency(pixels)
        removed = False
        for seg in _segments(adj):
            if len(seg) < 2:
                continue
            da, db = len(adj[seg[0]]), len(adj[seg[-1]])
            if sorted((da, db))[0] == 1 and max(da, db) >= 3 and path_length(seg) < spur_length:
                tip = seg if da == 1 else seg[::-1]
                pixels.difference_update(tip[:-1])
                removed = True
        if not removed:
            return pixels


def _outward(p, adj, steps=6):
    """Unit direction in which the chain ending at ``p`` leaves it."""
    prev, cur = None, p
    for _ in range(steps):
        nxt = [q for q in sorted(adj[cur]) if q != prev]
        if len(nxt) != 1:
            break
        prev, cur = cur, nxt[0]
    v = np.array(p, dtype=float) - np.array(cur, dtype=float)
    n = float(np.hypot(*v))
    return v / n if n > 0 else None


def _segment(p, q) -> list:
    """Digital straight segment from p to q, the same cells for either
    endpoint order or a 90 degree rotation: at exact half-way rounding both
    neighbours are kept."""
    n = max(abs(q[0] - p[0]), abs(q[1] - p[1]))
    cells = set()
    for t in range(n + 1):
        options = []
        for a, b in zip(p, q):
            x = a + (b - a) * t / n if n else float(a)
            lo = math.floor(x)
            options.append((lo, lo + 1) if x - lo == 0.5 else (int(round(x)),))
        cells.update((r, c) for r in options[0] for c in options[1])
    return sorted(cells)


def _bridge(pixels: set, inside: np.ndarray, gap: float, max_angle: float = BRIDGE_ANGLE) -> set:
    """Join free ends of separate traces that point at each other.

    Two degree-1 ends of different components are linked by a straight run
    of cells when they are at most ``gap`` apart, the run stays inside the
    shape, and each trace's outward direction is within ``max_angle`` of the
    run. Closest pairs are linked first and no cycles are created.
    """
    if gap <= 0:
        return pixels
    adj = _adjacency(pixels)
    comp_of = {}
    for k, comp in enumerate(_components(adj)):
        for c in comp:
            comp_of[c] = k
    ends = [p for p in sorted(adj) if len(adj[p]) == 1]
    dirs = {p: _outward(p, adj) for p in ends}
    cos_max = math.cos(max_angle)
    cands = []
    for i, p in enumerate(ends):
        for q in ends[i + 1 :]:
            if comp_of[p] == comp_of[q] or dirs[p] is None or dirs[q] is None:
                continue
            v = np.array(q, dtype=float) - np.array(p, dtype=float)
            d = float(np.hypot(*v))
            if d > gap or d == 0:
                continue
            u = v / d
            align = float(dirs[p] @ u) + float(dirs[q] @ -u)
            if float(dirs[p] @ u) >= cos_max and float(dirs[q] @ -u) >= cos_max:
                cands.append((round(d, 9), -round(align, 9), p, q))
    cands.sort()
    parent = {}

    def find(k):
        while parent.get(k, k) != k:
            k = parent[k]
        return k

    out = set(pixels)
    used = set()
    for _, _, p, q in cands:
        if p in used or q in used:
            continue
        a, b = find(comp_of[p]), find(comp_of[q])
        if a == b:
            continue
        run = _segment(p, q)
        if not all(inside[c] for c in run):
            continue
        out.update(run)
        parent[a] = b
        used.update((p, q))
    return out


def _components(adj):
    seen = set()
    for p in sorted(adj):
        if p in seen:
            continue
        comp, stack = [], [p]
        seen.add(p)
        while stack:
            q = stack.pop()
            comp.append(q)
            for n in adj[q]:
                if n not in seen:
                    seen.add(n)
                    stack.append(n)
        yield sorted(comp)


def _heading(a, b):
    return math.atan2(b[0] - a[0], b[1] - a[1])


def _turn(a, b):
    # rounded: grid headings make exact 45 degree turns common
    d = abs(a - b) % (2 * math.pi)
    return round(min(d, 2 * math.pi - d), 9)


def _level(v: float) -> float:
    """Depth rounded for ordering, so float noise cannot break exact ties."""
    return round(float(v), 9)


def _root(comp, level) -> tuple:
    """Deepest cell; mirror-image twins at equal depth are told apart by
    which side of the line to the trace centroid they lie on."""
    top = max(level.values())
    tied = [c for c in comp if level[c] == top]
    if len(tied) == 1:
        return tied[0]
    m = np.mean(tied, axis=0)
    a = np.mean(comp, axis=0) - m

    def side(c):
        return round(float(a[0] * (c[1] - m[1]) - a[1] * (c[0] - m[0])), 9)

    return max(tied, key=lambda c: (side(c), -c[0], -c[1]))


def _decompose(comp, adj, depth, bend: float = FORK_BEND, steps: int = 6):
    """Split a skeleton component into root-ward chains.

    The component is rooted at its deepest cell and turned into a geodesic
    tree. Each chain runs from a leaf towards the root; at a fork the child
    with the longest remaining reach continues it. A chain ends where its
    continuation turns by ``bend`` or more (directions taken over ``steps``
    cells), so corners and T junctions separate axes; every child of such a
    cell starts its own chain. Every
    child of the root starts its own chain, so a trace passing through a
    depth maximum is cut in two.
    """
    level = {c: _level(depth[c]) for c in comp}
    root = _root(comp, level)
    dist = {root: 0.0}
    heap = [(0.0, root)]
    while heap:
        d, p = heapq.heappop(heap)
        if d > dist[p]:
            continue
        for q in adj[p]:
            nd = d + _step(p, q)
            if nd < dist.get(q, math.inf) - 1e-9:
                dist[q] = nd
                heapq.heappush(heap, (nd, q))
    # among equally short predecessors prefer a straight step, then the deeper cell
    parent = {root: None}
    for q in dist:
        if q != root:
            parent[q] = min(
                (p for p in adj[q] if abs(dist[p] + _step(p, q) - dist[q]) < 1e-9),
                key=lambda p: (_step(p, q), -level[p], p),
            )
    children = {p: [] for p in dist}
    for q, p in parent.items():
        if p is not None:
            children[p].append(q)
    reach = {}
    for p in sorted(dist, key=lambda c: -dist[c]):
        reach[p] = max((reach[q] + _step(p, q) for q in children[p]), default=0.0)

    def ranked(p):
        # ties in reach go to the straighter child, then the counter-clockwise
        # one: both survive rotation, so mirrored twins never swap roles
        back = parent[p]
        ref = _heading(back, p) if back is not None else 0.0

        def key(q):
            bend = math.remainder(_heading(p, q) - ref, 2 * math.pi)
            return (-round(reach[q] + _step(p, q), 9), round(abs(bend), 9), -bend, q)

        return sorted(children[p], key=key)

    def ahead(q):
        # cell ``steps`` along the longest-reach descent from q
        for _ in range(steps - 1):
            kids = ranked(q)
            if not kids:
                break
            q = kids[0]
        return q

    def turn(path, k, q):
        tip = path[k]
        return _turn(_heading(path[k - steps], tip), _heading(tip, ahead(q)))

    chains = []
    stack = [[root, q] for q in ranked(root)]
    if not stack:
        return [[root]]
    while stack:
        path = stack.pop()
        while True:
            tip = path[-1]
            kids = ranked(tip)
            if not kids:
                break
            if len(path) > steps and turn(path, -1, kids[0]) >= round(bend, 9):
                # cut at the sharpest cell, not where the window first sees the turn
                nxt = ranked(kids[0])
                if not nxt or turn(path + [kids[0]], -1, nxt[0]) <= turn(path, -1, kids[0]):
                    stack.extend([tip, q] for q in kids)
                    break
            for q in kids[1:]:
                stack.append([tip, q])
            path.append(kids[0])
        chains.append(path[::-1])
    return chains


def group_branches(
    points: list[SymmetryPoint],
    field: Field,
    spur_length: float | None = None,
    gap: float | None = None,
) -> list[SymmetryBranch]:
    """Connectedness grouping of symmetry points into simple chains.

    Each kind is thinned to a one-pixel skeleton and spurs shorter than
    ``spur_length`` are stripped. Traces interrupted by less than ``gap``
    (default ``GAP_FRACTION * sqrt(area)``) are bridged, see
    :func:`_bridge`. Every remaining connected trace is cut
    into chains by :func:`_decompose`; a chain lists its boundary end first
    and its deep end (termination) last.
    """
    if spur_length is None:
        spur_length = default_min_length(field)
    if gap is None:
        gap = GAP_FRACTION * math.sqrt(field.mask.area)
    depth = field.depth
    by_cell = {p.cell: p for p in points}
    out = []
    for kind in ("positive", "negative"):
        cells = [p.cell for p in points if p.kind == kind]
        if not cells:
            continue
        pixels = thin(cells, depth)
        pixels = _remove_spurs(pixels, spur_length)
        pixels = _bridge(pixels, field.mask.inner, gap)
        adj = _adjacency(pixels)
        for comp in _components(adj):
            for chain in _decompose(comp, adj, depth):
                pts = tuple(by_cell.get(c) or SymmetryPoint(c, kind, 0.0) for c in chain)
                out.append(
                    SymmetryBranch(
                        pts, kind, path_length(chain), tuple(float(depth[c]) for c in chain)
                    )
                )
    out.sort(key=lambda b: (b.kind, b.termination, b.start))
    return out


def split_at(branches: list[SymmetryBranch], cell, radius: float = 1.5) -> list[SymmetryBranch]:
    """Cut every chain passing within ``radius`` of ``cell`` at its nearest cell.

    Both pieces end at the cut, so a trace running through a saddle becomes
    two branches terminating there.
    """
    out = []
    c = np.asarray(cell, dtype=float)
    for b in branches:
        pts = np.asarray(b.cells, dtype=float)
        d = np.hypot(*(pts - c).T)
        k = int(np.argmin(d))
        if d[k] > radius or k == len(pts) - 1:
            out.append(b)
            continue
        pieces = [(b.points[: k + 1], b.depths[: k + 1]), (b.points[k:][::-1], b.depths[k:][::-1])]
        for p, dep in pieces:
            if len(p) >= 2:
                out.append(SymmetryBranch(p, b.kind, path_length([q.cell for q in p]), dep))
    out.sort(key=lambda b: (b.kind, b.termination, b.start))
    return out


# --------------------------------------------------------------------------
# pruning


def reaches_center(branch: SymmetryBranch, center: CriticalPoint, eps: float = CENTER_EPS) -> bool:
    """Deep end within the center region: 1 - v there is within eps of the center's."""
    return branch.deep_depth >= (1.0 - eps) * center.depth


def default_min_length(field_or_mask) -> float:
    mask = getattr(field_or_mask, "mask", field_or_mask)
    return MIN_LENGTH_FRACTION * math.sqrt(mask.area)


def prune(
    branches: list[SymmetryBranch],
    min_length: float,
    center: CriticalPoint | None = None,
    eps: float = CENTER_EPS,
) -> list[SymmetryBranch]:
    """Drop short branches unless their deep end reaches the center region."""
    if min_length < 0:
        raise ValueError("min_length must be non-negative")
    keep = []
    for b in branches:
        if b.length >= min_length or (center is not None and reaches_center(b, center, eps)):
            keep.append(b)
    return keep
