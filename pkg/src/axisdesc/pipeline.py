"""End-to-end extraction: mask -> field -> branches -> descriptor alternatives."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

from . import descriptor as dsc
from .errors import AxisDescError, MajorAxesError, TopologyError
from .field import (
    CriticalPoint,
    DiffusionSchedule,
    Field,
    anneal_to_center,
    count_kinds,
    find_critical_points,
    solve_screened,
)
from .grid import ShapeMask
from .symmetry import (
    CENTER_EPS,
    CONTRAST,
    GAP_FRACTION,
    MARGIN_FRACTION,
    MIN_LENGTH_FRACTION,
    SymmetryBranch,
    SymmetryPoint,
    detect_symmetry_points,
    group_branches,
    prune,
    split_at,
)

TAU_FRACTION = 0.02


@dataclass(frozen=True)
class ExtractParams:
    """Every knob that changes a descriptor; two databases are comparable
    only if these agree."""

    mode: str = "diffusion"
    rho: float | None = None
    tau_start: float | None = None
    tau_fraction: float = TAU_FRACTION
    tau_growth: float = 2.0
    tau_max: float | None = None
    tau_max_factor: float = 64.0
    target: str = "center"
    min_length_fraction: float = MIN_LENGTH_FRACTION
    anchor_fraction: float = dsc.ANCHOR_FRACTION
    center_eps: float = CENTER_EPS
    contrast: float = CONTRAST
    margin_fraction: float = MARGIN_FRACTION
    gap_fraction: float = GAP_FRACTION
    boundary_band: float = dsc.BOUNDARY_BAND
    fg_threshold: int = 128

    def __post_init__(self):
        if self.mode not in ("screened", "diffusion"):
            raise ValueError(f"mode must be screened or diffusion, got {self.mode!r}")
        if self.target not in ("center", "dumbbell"):
            raise ValueError(f"target must be center or dumbbell, got {self.target!r}")
        if self.mode == "screened" and not (self.rho and self.rho > 0):
            raise ValueError("screened mode needs a positive rho")

    def schedule(self, mask: ShapeMask) -> DiffusionSchedule:
        start = self.tau_start if self.tau_start is not None else self.tau_fraction * mask.area
        start = max(start, 1.0)
        tmax = self.tau_max if self.tau_max is not None else self.tau_max_factor * start
        target = "single-center" if self.target == "center" else "retain-dumbbell"
        return DiffusionSchedule(start, self.tau_growth, max(tmax, start), target)

    def as_items(self) -> list[tuple[str, str]]:
        return [(f.name, _fmt(getattr(self, f.name))) for f in fields(self)]

    @classmethod
    def from_items(cls, items: dict) -> "ExtractParams":
        kw = {}
        for f in fields(cls):
            if f.name not in items:
                continue
            raw = items[f.name]
            if raw in ("none", "None", None):
                kw[f.name] = None
            elif f.name in ("mode", "target"):
                kw[f.name] = str(raw)
            elif f.name == "fg_threshold":
                kw[f.name] = int(raw)
            else:
                kw[f.name] = float(raw)
        return cls(**kw)


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class Extraction:
    mask: ShapeMask
    field: Field
    center: CriticalPoint
    criticals: list[CriticalPoint]
    points: list[SymmetryPoint]
    branches: list[SymmetryBranch]
    major: list[SymmetryBranch]
    frames: list
    descriptors: list[dsc.ShapeDescriptor]
    topology: str = "single-center"
    notes: list[str] = field(default_factory=list)


class StageError(AxisDescError):
    """Wraps a pipeline failure with the stage name and mask diagnostics."""

    def __init__(self, stage, cause, mask=None):
        diag = ""
        if mask is not None:
            diag = f" [mask {mask.width}x{mask.height}, area {mask.area}]"
        super().__init__(f"{stage}: {cause}{diag}")
        self.stage = stage
        self.cause = cause


def compute_field(mask: ShapeMask, params: ExtractParams):
    """The final field and its center, honouring mode and target."""
    if params.mode == "screened":
        fld = solve_screened(mask, params.rho)
        crit = find_critical_points(fld)
        ne, nh = count_kinds(crit)
        if ne == 1:
            return fld, crit[0]
        if params.target == "dumbbell" and (ne, nh) == (2, 1):
            return fld, next(p for p in crit if p.kind == "hyperbolic")
        raise TopologyError(
            f"screened field at rho={params.rho:g} has {ne} elliptic and {nh} hyperbolic points",
            crit,
        )
    return anneal_to_center(mask, params.schedule(mask))


def extract(mask: ShapeMask, params: ExtractParams = ExtractParams()) -> Extraction:
    try:
        fld, center = compute_field(mask, params)
    except TopologyError:
        raise
    except AxisDescError as exc:
        raise StageError("field", exc, mask) from exc
    crit = find_critical_points(fld)
    min_len = params.min_length_fraction * math.sqrt(mask.area)
    d_anchor = params.anchor_fraction * math.sqrt(mask.area)
    points = detect_symmetry_points(fld, contrast=params.contrast, margin_fraction=params.margin_fraction)
    raw = group_branches(points, fld, spur_length=min_len, gap=params.gap_fraction * math.sqrt(mask.area))
    notes = []
    if center.kind == "hyperbolic":
        branches = prune(split_at(raw, center.cell), min_len, None)
        frames, origin = dsc.dumbbell_frames(crit, branches, fld, d_anchor)
        if frames is not None:
            ends = {f.branch_index for pair in frames for f in pair}
            descs = [
                d
                for fr in frames
                for d in dsc.build_descriptors(
                    branches, fr, fld, origin, d_anchor, params.center_eps, "dumbbell", ends, params.boundary_band
                )
            ]
            major = [branches[i] for i in sorted({f.branch_index for pair in frames for f in pair})]
            return Extraction(mask, fld, origin, crit, points, branches, major, frames, descs, "dumbbell")
        notes.append("saddle lacks two positive axes; one description per lobe")
        descs, all_frames, major = [], [], []
        for lobe in (p for p in crit if p.kind == "elliptic"):
            br = prune(raw, min_len, lobe, params.center_eps)
            try:
                mj = dsc.find_major_axes(br, lobe, fld, params.center_eps)
            except MajorAxesError as exc:
                raise StageError("descriptor", exc, mask) from exc
            frs = dsc.build_frames(mj, lobe, fld, d_anchor, branches=br)
            for fr in frs:
                descs += dsc.build_descriptors(
                    br, fr, fld, lobe, d_anchor, params.center_eps, band=params.boundary_band
                )
            all_frames += frs
            major += mj
        return Extraction(mask, fld, center, crit, points, raw, major, all_frames, descs, "dumbbell", notes)
    branches = prune(raw, min_len, center, params.center_eps)
    try:
        major = dsc.find_major_axes(branches, center, fld, params.center_eps)
        frames = dsc.build_frames(major, center, fld, d_anchor, branches=branches)
    except MajorAxesError as exc:
        raise StageError("descriptor", exc, mask) from exc
    descs = [
        d
        for fr in frames
        for d in dsc.build_descriptors(branches, fr, fld, center, d_anchor, params.center_eps, band=params.boundary_band)
    ]
    return Extraction(mask, fld, center, crit, points, branches, major, frames, descs)
