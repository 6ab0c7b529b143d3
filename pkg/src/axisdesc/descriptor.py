"""Shape-centred polar descriptors built from the surviving symmetry branches.

Angles are counter-clockwise in image coordinates (x right, y up). A shape is
described as two halves, each in the frame of one positive major axis; the
records of a half are its branches sorted by angle from that axis.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from itertools import permutations
from pathlib import Path

import numpy as np

from .errors import DescriptorFormatError, MajorAxesError
from .field import CriticalPoint, Field
from .symmetry import CENTER_EPS, SymmetryBranch, reaches_center

TWO_PI = 2.0 * math.pi
ANCHOR_FRACTION = 0.15
FORMAT_VERSION = 1
# branches this close (radians) to a reference axis get two-sided alternatives
BOUNDARY_BAND = 0.25


@dataclass(frozen=True)
class ReferenceFrame:
    origin: tuple[float, float]
    axis_direction: tuple[float, float]
    half_id: int
    anchor: tuple[float, float] | None = None
    branch_index: int | None = None

    @property
    def angle(self) -> float:
        return math.atan2(self.axis_direction[1], self.axis_direction[0]) % TWO_PI


@dataclass(frozen=True)
class BranchRecord:
    kind: str
    r: float
    theta: float
    norm_length: float
    is_reference: bool = False
    order_index: int = 0
    prev: int = 0
    next: int = 0
    # provenance, not serialised: index into the branch list, image-space ends
    branch_index: int | None = field(default=None, compare=False)
    termination_xy: tuple[float, float] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Half:
    frame: ReferenceFrame
    records: tuple[BranchRecord, ...]


@dataclass(frozen=True)
class ShapeDescriptor:
    halves: tuple[Half, Half]
    total_axes_length: float
    center: tuple[float, float]
    orientation: tuple[float, float]
    topology: str = "single-center"

    @property
    def extrinsic(self) -> dict:
        return {
            "center": self.center,
            "total_length": self.total_axes_length,
            "orientation": self.orientation,
        }

    @property
    def records(self) -> list[BranchRecord]:
        return [r for h in self.halves for r in h.records]

    def __len__(self):
        return sum(len(h.records) for h in self.halves)


# --------------------------------------------------------------------------
# geometry helpers


def cell_xy(field: Field, cell) -> tuple[float, float]:
    x, y = field.mask.to_xy(cell[0], cell[1])
    return float(x), float(y)


def _angle(dx: float, dy: float) -> float:
    return math.atan2(dy, dx) % TWO_PI


def default_anchor_distance(field: Field) -> float:
    return ANCHOR_FRACTION * math.sqrt(field.mask.area)


def find_major_axes(
    branches: list[SymmetryBranch],
    center: CriticalPoint,
    field: Field | None = None,
    eps: float = CENTER_EPS,
    min_positive: int = 2,
) -> list[SymmetryBranch]:
    """Branches whose deep end lies in the center region.

    Raises :class:`MajorAxesError` when fewer than ``min_positive`` positive
    branches reach the center, since the frame is anchored on that kind.
    """
    if center.kind != "elliptic" and center.kind != "hyperbolic":
        raise ValueError("center must be a critical point")
    major = [b for b in branches if reaches_center(b, center, eps)]
    npos = sum(b.kind == "positive" for b in major)
    if npos < min_positive:
        raise MajorAxesError(
            f"insufficient major axes: {npos} positive branch(es) reach the center "
            f"at {center.cell}, need {min_positive}"
        )
    return major


def is_degenerate(major: list[SymmetryBranch]) -> bool:
    """True unless at least two branches of each kind reach the center."""
    npos = sum(b.kind == "positive" for b in major)
    return npos < 2 or len(major) - npos < 2


def reach(branch: SymmetryBranch, center: CriticalPoint) -> float:
    """Arc distance from the center to the far end: the gap to the deep end plus the branch."""
    gap = math.hypot(branch.termination[0] - center.cell[0], branch.termination[1] - center.cell[1])
    return gap + branch.length


def anchor_point(branch: SymmetryBranch, center: CriticalPoint, d_anchor: float):
    """Cell on ``branch`` at arc distance ``d_anchor`` from the center.

    The walk starts at the deep end, which is first joined to the center by a
    straight segment, and moves outward; a branch that is too short yields
    its boundary end.
    """
    cells = branch.cells[::-1]
    c0 = np.asarray(center.cell, dtype=float)
    travelled = float(np.hypot(*(np.asarray(cells[0], dtype=float) - c0)))
    if travelled >= d_anchor:
        return cells[0]
    for a, b in zip(cells, cells[1:]):
        travelled += math.hypot(b[0] - a[0], b[1] - a[1])
        if travelled >= d_anchor:
            return b
    return cells[-1]


def _frame(field, center, branch, index, d_anchor, half_id):
    origin = cell_xy(field, center.cell)
    anchor = cell_xy(field, anchor_point(branch, center, d_anchor))
    dx, dy = anchor[0] - origin[0], anchor[1] - origin[1]
    n = math.hypot(dx, dy)
    if n == 0:
        # anchor coincides with the center: fall back to the branch's far end
        anchor = cell_xy(field, branch.start)
        dx, dy = anchor[0] - origin[0], anchor[1] - origin[1]
        n = math.hypot(dx, dy) or 1.0
    return ReferenceFrame(origin, (dx / n, dy / n), half_id, anchor, index)


def build_frames(
    major: list[SymmetryBranch],
    center: CriticalPoint,
    field: Field,
    d_anchor: float | None = None,
    branches: list[SymmetryBranch] | None = None,
) -> list[tuple[ReferenceFrame, ReferenceFrame]]:
    """Frame pairs anchored on the positive major axes.

    Two positive major axes give a single pair (ordered by the CCW angle of
    their anchors); n > 2 give all n(n-1) ordered pairs as alternatives.
    Axes too short to reach ``d_anchor`` are skipped while at least two
    others remain.
    ``branches`` is the full branch list the frames will be used with, so
    that ``branch_index`` refers to it.
    """
    if d_anchor is None:
        d_anchor = default_anchor_distance(field)
    branches = major if branches is None else branches
    pos = [b for b in major if b.kind == "positive"]
    if len(pos) < 2:
        raise MajorAxesError(f"insufficient major axes: {len(pos)} positive, need 2")
    # stubs that cannot hold an anchor point only anchor when nothing else can
    long = [b for b in pos if reach(b, center) >= d_anchor]
    if len(long) >= 2:
        pos = long
    index = {id(b): i for i, b in enumerate(branches)}
    single = [_frame(field, center, b, index.get(id(b)), d_anchor, 0) for b in pos]
    order = sorted(range(len(pos)), key=lambda i: (single[i].angle, i))
    if len(pos) == 2:
        pairs = [tuple(order)]
    else:
        pairs = list(permutations(order, 2))
    out = []
    for i, j in pairs:
        out.append((replace(single[i], half_id=0), replace(single[j], half_id=1)))
    return out


def _placements(branches, frames, field, center, d_anchor, eps, major):
    """Per used branch: (index, branch, r, phi, reference half or None)."""
    f0, f1 = frames
    origin = f0.origin
    used = [(i, b) for i, b in enumerate(branches) if b.length > 0]
    total = math.fsum(b.length for _, b in used)
    if total <= 0:
        raise MajorAxesError("no branches with positive length")
    refs = {f0.branch_index: 0, f1.branch_index: 1}
    out = []
    for i, b in used:
        tx, ty = cell_xy(field, b.termination)
        r = math.hypot(tx - origin[0], ty - origin[1]) / total
        is_major = reaches_center(b, center, eps) if major is None else i in major
        if is_major:
            ax, ay = cell_xy(field, anchor_point(b, center, d_anchor))
        else:
            ax, ay = tx, ty
        phi = _angle(ax - origin[0], ay - origin[1])
        out.append((i, b, r, phi, refs.get(i), (tx, ty)))
    return out, total


def _sector(phi, a0, a1, sweep):
    """Half whose CCW sweep from its axis contains ``phi``, and theta in it."""
    rel = (phi - a0) % TWO_PI
    if rel < sweep:
        return 0, rel
    return 1, (phi - a1) % TWO_PI


def _assemble(placed, total, frames, topology, moved=frozenset(), band=0.0):
    """Records for every placement; indices in ``moved`` go to the other half.

    A record moved across the axis that starts its new half sits at theta 0
    of that half; one moved back across it keeps its (just past the sweep)
    angle in the previous half.
    """
    f0, f1 = frames
    axes = (f0.angle, f1.angle)
    sweep = (f1.angle - f0.angle) % TWO_PI or TWO_PI
    lengths = _unit_sum([b.length / total for _, b, *_ in placed])
    halves: list[list] = [[], []]
    for (i, b, r, phi, ref, txy), nl in zip(placed, lengths):
        if ref is not None:
            h, theta = ref, 0.0
        else:
            h, theta = _sector(phi, axes[0], axes[1], sweep)
            if i in moved:
                h = 1 - h
                theta = (phi - axes[h]) % TWO_PI
                if theta >= TWO_PI - band:
                    theta = 0.0
        halves[h].append(BranchRecord(b.kind, r, theta, nl, ref is not None, branch_index=i, termination_xy=txy))
    for recs in halves:
        recs.sort(key=lambda rec: (rec.theta, not rec.is_reference, rec.kind, rec.r, rec.branch_index))
    return ShapeDescriptor(_link(halves, (f0, f1)), float(total), f0.origin, f0.axis_direction, topology)


def build_descriptor(
    branches: list[SymmetryBranch],
    frames: tuple[ReferenceFrame, ReferenceFrame],
    field: Field,
    center: CriticalPoint,
    d_anchor: float | None = None,
    eps: float = CENTER_EPS,
    topology: str = "single-center",
    major: set[int] | None = None,
) -> ShapeDescriptor:
    """Polar records of every branch in the two half-frames.

    A branch's position vector points from the origin to its termination
    point; for a major branch (whose termination sits at the center) the
    anchor point is used for the direction instead. Branches are assigned
    to the half whose CCW sweep, starting at that half's reference axis,
    contains their direction, so a direction exactly on an axis belongs to
    the half starting there. ``major`` lists the indices of the branches
    treated as ending at the center; by default those reaching its region.
    """
    if d_anchor is None:
        d_anchor = default_anchor_distance(field)
    placed, total = _placements(branches, frames, field, center, d_anchor, eps, major)
    return _assemble(placed, total, frames, topology)


def boundary_groups(placed, frames, band: float):
    """For each reference axis, the non-reference placements within ``band``
    radians before it (end of the previous half) and after it."""
    groups = []
    for a in (frames[0].angle, frames[1].angle):
        before, after = [], []
        for i, _, _, phi, ref, _ in placed:
            if ref is not None:
                continue
            d = (phi - a) % TWO_PI
            if d < band:
                after.append(i)
            elif TWO_PI - d <= band:
                before.append(i)
        groups.append((tuple(before), tuple(after)))
    return groups


def build_descriptors(
    branches: list[SymmetryBranch],
    frames: tuple[ReferenceFrame, ReferenceFrame],
    field: Field,
    center: CriticalPoint,
    d_anchor: float | None = None,
    eps: float = CENTER_EPS,
    topology: str = "single-center",
    major: set[int] | None = None,
    band: float = BOUNDARY_BAND,
) -> list[ShapeDescriptor]:
    """The descriptor of :func:`build_descriptor` followed by its boundary
    alternatives.

    Branches whose direction lies within ``band`` of a reference axis could
    fall on either side of it in a slightly perturbed copy of the shape. At
    each axis the whole group is alternatively placed after the axis or
    before it; distinct results are returned, the plain assignment first.
    """
    if d_anchor is None:
        d_anchor = default_anchor_distance(field)
    placed, total = _placements(branches, frames, field, center, d_anchor, eps, major)
    options = []
    for before, after in boundary_groups(placed, frames, band) if band > 0 else []:
        # as assigned / everything after the axis / everything before it
        opts = [frozenset()]
        if before:
            opts.append(frozenset(before))
        if after:
            opts.append(frozenset(after))
        options.append(opts)
    combos = [frozenset()]
    for opts in options:
        combos = [c | o for c in combos for o in opts]
    out, seen = [], set()
    for moved in combos:
        d = _assemble(placed, total, frames, topology, moved, band)
        key = format_descriptor(d)
        if key not in seen:
            seen.add(key)
            out.append(d)
    return out


def _unit_sum(values: list[float]) -> list[float]:
    """Nudge the largest entry so that ``math.fsum(values) == 1.0`` exactly."""
    values = list(values)
    if not values:
        return values
    k = max(range(len(values)), key=lambda i: values[i])
    rest = math.fsum(values[:k] + values[k + 1 :])
    values[k] = 1.0 - rest
    for _ in range(8):
        s = math.fsum(values)
        if s == 1.0:
            break
        values[k] = math.nextafter(values[k], 1.0 if s < 1.0 else 0.0)
    return values


def _link(halves, frames) -> tuple[Half, Half]:
    """Assign global order indices and cyclic prev/next links."""
    n = sum(len(h) for h in halves)
    out = []
    k = 0
    for recs, fr in zip(halves, frames):
        linked = []
        for rec in recs:
            linked.append(replace(rec, order_index=k, prev=(k - 1) % n, next=(k + 1) % n))
            k += 1
        out.append(Half(fr, tuple(linked)))
    return tuple(out)


def dumbbell_frames(
    criticals: list[CriticalPoint],
    branches: list[SymmetryBranch],
    field: Field,
    d_anchor: float | None = None,
    radius: float | None = None,
):
    """Frame pairs for a two-lobed shape, with the origin at the saddle.

    The reference pair is the two longest positive branches ending within
    ``radius`` of the saddle. Returns ``(frames, origin)``; when no
    such pair exists, ``(None, None)`` signals that the caller should fall
    back to one single-center description per lobe.
    """
    ell = [p for p in criticals if p.kind == "elliptic"]
    hyp = [p for p in criticals if p.kind == "hyperbolic"]
    if len(ell) != 2 or len(hyp) != 1:
        raise ValueError("dumbbell frames need exactly two elliptic points and one saddle")
    saddle = hyp[0]
    if d_anchor is None:
        d_anchor = default_anchor_distance(field)
    if radius is None:
        radius = d_anchor
    s = np.asarray(saddle.cell, dtype=float)
    near = []
    for b in branches:
        if b.kind != "positive":
            continue
        dist = float(np.hypot(*(np.asarray(b.termination, dtype=float) - s)))
        if dist <= radius:
            near.append((dist, b))
    if len(near) < 2:
        return None, None
    # the reference pair is the two longest; stubs also end near a saddle
    near.sort(key=lambda t: (-t[1].length, t[0], t[1].termination))
    pair = [b for _, b in near[:2]]
    return build_frames(pair, saddle, field, d_anchor, branches=branches), saddle


# --------------------------------------------------------------------------
# text format


def format_descriptor(desc: ShapeDescriptor) -> str:
    out = io.StringIO()
    out.write(f"AXISDESC {FORMAT_VERSION}\n")
    out.write(f"topology {desc.topology}\n")
    x0, y0 = desc.center
    m0, m1 = desc.orientation
    out.write(f"extrinsic {x0:.6f} {y0:.6f} {desc.total_axes_length:.6f} {m0:.6f} {m1:.6f}\n")
    for hid, half in enumerate(desc.halves):
        out.write(f"half {hid} {len(half.records)}\n")
        for rec in half.records:
            out.write(
                f"{rec.kind} {rec.r:.6f} {rec.theta:.6f} {rec.norm_length:.6f} "
                f"{int(rec.is_reference)} {rec.order_index}\n"
            )
    # avoid "-0.000000"
    return out.getvalue().replace("-0.000000", "0.000000")


def parse_descriptor(text: str, source: str = "<string>") -> ShapeDescriptor:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]

    def fail(msg):
        raise DescriptorFormatError(f"{source}: {msg}")

    if not lines or lines[0].split() != ["AXISDESC", str(FORMAT_VERSION)]:
        fail("missing 'AXISDESC 1' header")
    try:
        key, topology = lines[1].split()
        if key != "topology" or topology not in ("single-center", "dumbbell"):
            fail("bad topology line")
        parts = lines[2].split()
        if parts[0] != "extrinsic" or len(parts) != 6:
            fail("bad extrinsic line")
        x0, y0, total, m0, m1 = (float(v) for v in parts[1:])
        halves = []
        pos = 3
        for hid in range(2):
            head = lines[pos].split()
            if head[0] != "half" or int(head[1]) != hid:
                fail(f"expected 'half {hid}'")
            n = int(head[2])
            recs = []
            for ln in lines[pos + 1 : pos + 1 + n]:
                kind, r, theta, nl, is_ref, order = ln.split()
                if kind not in ("positive", "negative"):
                    fail(f"bad branch kind {kind!r}")
                recs.append(BranchRecord(kind, float(r), float(theta), float(nl), is_ref == "1", int(order)))
            if len(recs) != n:
                fail(f"half {hid} declares {n} records, found {len(recs)}")
            halves.append(recs)
            pos += 1 + n
    except (IndexError, ValueError) as exc:
        fail(f"malformed descriptor ({exc})")
    if pos != len(lines):
        fail("trailing content")
    orient = (m0, m1)
    frames = [ReferenceFrame((x0, y0), orient, 0), ReferenceFrame((x0, y0), orient, 1)]
    # records keep their stored order indices; links are recomputed
    n = sum(len(h) for h in halves)
    linked = []
    for recs, fr in zip(halves, frames):
        linked.append(
            Half(
                fr,
                tuple(replace(r, prev=(r.order_index - 1) % n, next=(r.order_index + 1) % n) for r in recs),
            )
        )
    return ShapeDescriptor(tuple(linked), total, (x0, y0), orient, topology)


def write_descriptor(desc: ShapeDescriptor, path) -> None:
    Path(path).write_text(format_descriptor(desc), encoding="utf-8")


def read_descriptor(path) -> ShapeDescriptor:
    return parse_descriptor(Path(path).read_text(encoding="utf-8"), str(path))
