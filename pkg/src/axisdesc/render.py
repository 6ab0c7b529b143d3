"""SVG overlays of an extraction: silhouette, axes by kind, center, frames.

Colours: positive branches red, negative yellow, center green, reference
axes dark red, position vectors blue. Coordinates are raster cells of the
padded mask (row down), so the overlay lines up with the silhouette.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .pipeline import Extraction

COLORS = {
    "positive": "#e02020",
    "negative": "#e8c000",
    "center": "#10a010",
    "reference": "#900000",
    "vector": "#2050e0",
    "shape": "#d8d8d8",
}


def _runs(mask: np.ndarray):
    """Horizontal runs of true cells as (row, col_start, length)."""
    for r, row in enumerate(mask):
        padded = np.concatenate([[False], row, [False]])
        edges = np.flatnonzero(padded[1:] != padded[:-1])
        for a, b in zip(edges[::2], edges[1::2]):
            yield r, int(a), int(b - a)


def _xy_to_cell(ext: Extraction, xy):
    """Inverse of ShapeMask.to_xy as fractional (col, row) drawing coordinates."""
    m = ext.mask
    col = xy[0] - m.offset[1]
    row = (m.source_shape[0] - 1) - xy[1] - m.offset[0]
    return col + 0.5, row + 0.5


def render_svg(ext: Extraction, alternative: int = 0, scale: float = 3.0) -> str:
    m = ext.mask
    w, h = m.width, m.height
    out = io.StringIO()
    out.write(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w * scale:.0f}" height="{h * scale:.0f}" '
        f'viewBox="0 0 {w} {h}">\n'
    )
    out.write('<rect width="100%" height="100%" fill="white"/>\n')
    out.write(f'<g fill="{COLORS["shape"]}" shape-rendering="crispEdges">\n')
    for r, c, n in _runs(m.interior):
        out.write(f'<rect x="{c}" y="{r}" width="{n}" height="1"/>\n')
    out.write("</g>\n")
    for b in ext.branches:
        pts = " ".join(f"{c + 0.5:.1f},{r + 0.5:.1f}" for r, c in b.cells)
        out.write(
            f'<polyline points="{pts}" fill="none" stroke="{COLORS[b.kind]}" stroke-width="1.2" '
            f'stroke-linejoin="round"/>\n'
        )
    if ext.descriptors:
        desc = ext.descriptors[min(alternative, len(ext.descriptors) - 1)]
        ox, oy = _xy_to_cell(ext, desc.center)
        for rec in desc.records:
            if rec.termination_xy is None:
                continue
            tx, ty = _xy_to_cell(ext, rec.termination_xy)
            out.write(
                f'<line x1="{ox:.1f}" y1="{oy:.1f}" x2="{tx:.1f}" y2="{ty:.1f}" '
                f'stroke="{COLORS["vector"]}" stroke-width="0.6" stroke-dasharray="2,1"/>\n'
            )
        for half in desc.halves:
            fr = half.frame
            if fr.anchor is None:
                continue
            ax, ay = _xy_to_cell(ext, fr.anchor)
            out.write(
                f'<line x1="{ox:.1f}" y1="{oy:.1f}" x2="{ax:.1f}" y2="{ay:.1f}" '
                f'stroke="{COLORS["reference"]}" stroke-width="2"/>\n'
            )
    cr, cc = ext.center.cell
    out.write(f'<circle cx="{cc + 0.5}" cy="{cr + 0.5}" r="2.5" fill="{COLORS["center"]}"/>\n')
    out.write("</svg>\n")
    return out.getvalue()


def write_svg(ext: Extraction, path, alternative: int = 0) -> None:
    Path(path).write_text(render_svg(ext, alternative), encoding="utf-8")
