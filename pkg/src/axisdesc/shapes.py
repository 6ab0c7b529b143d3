"""Parametric silhouettes and their rasterisation under similarity transforms.

Shapes live in a continuous plane (x right, y up) as unions of primitives.
``rasterize`` samples pixel centres, so a rotated or scaled copy is a fresh
rasterisation of the same continuous shape rather than a resampled image.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from matplotlib.path import Path as MplPath


@dataclass(frozen=True)
class Ellipse:
    cx: float
    cy: float
    a: float
    b: float
    angle: float = 0.0

    def contains(self, x, y):
        c, s = math.cos(self.angle), math.sin(self.angle)
        dx, dy = x - self.cx, y - self.cy
        u = (c * dx + s * dy) / self.a
        w = (-s * dx + c * dy) / self.b
        return u * u + w * w <= 1.0

    def bbox(self):
        r = max(self.a, self.b)
        return self.cx - r, self.cy - r, self.cx + r, self.cy + r


def Disk(cx, cy, r):
    return Ellipse(cx, cy, r, r)


@dataclass(frozen=True)
class Capsule:
    """Segment swept by a disk whose radius varies linearly from r0 to r1."""

    x0: float
    y0: float
    x1: float
    y1: float
    r0: float
    r1: float | None = None

    def contains(self, x, y):
        r1 = self.r0 if self.r1 is None else self.r1
        dx, dy = self.x1 - self.x0, self.y1 - self.y0
        L2 = dx * dx + dy * dy
        n = max(2, int(math.ceil(math.sqrt(L2) / 0.25)) + 1)
        inside = np.zeros(np.shape(x), dtype=bool)
        for t in np.linspace(0.0, 1.0, n):
            cx, cy = self.x0 + t * dx, self.y0 + t * dy
            r = self.r0 + t * (r1 - self.r0)
            inside |= (x - cx) ** 2 + (y - cy) ** 2 <= r * r
        return inside

    def bbox(self):
        r = max(self.r0, self.r0 if self.r1 is None else self.r1)
        return (
            min(self.x0, self.x1) - r,
            min(self.y0, self.y1) - r,
            max(self.x0, self.x1) + r,
            max(self.y0, self.y1) + r,
        )


@dataclass(frozen=True)
class Polygon:
    points: tuple[tuple[float, float], ...]

    def contains(self, x, y):
        path = MplPath(np.asarray(self.points, dtype=float))
        xy = np.column_stack([np.ravel(x), np.ravel(y)])
        return path.contains_points(xy).reshape(np.shape(x))

    def bbox(self):
        p = np.asarray(self.points, dtype=float)
        return p[:, 0].min(), p[:, 1].min(), p[:, 0].max(), p[:, 1].max()


def regular_polygon(cx, cy, r, n, phase=0.0):
    return Polygon(
        tuple(
            (cx + r * math.cos(phase + 2 * math.pi * k / n), cy + r * math.sin(phase + 2 * math.pi * k / n))
            for k in range(n)
        )
    )


@dataclass(frozen=True)
class Silhouette:
    parts: tuple = ()
    cuts: tuple = ()
    name: str = ""
    # named landmarks (e.g. finger bases) in shape coordinates, for tests
    landmarks: dict = field(default_factory=dict, compare=False)

    def contains(self, x, y):
        inside = np.zeros(np.shape(x), dtype=bool)
        for p in self.parts:
            inside |= p.contains(x, y)
        for p in self.cuts:
            inside &= ~p.contains(x, y)
        return inside

    def bbox(self):
        b = np.array([p.bbox() for p in self.parts])
        return b[:, 0].min(), b[:, 1].min(), b[:, 2].max(), b[:, 3].max()

    def union(self, *others):
        parts = list(self.parts)
        cuts = list(self.cuts)
        for o in others:
            if isinstance(o, Silhouette):
                parts.extend(o.parts)
                cuts.extend(o.cuts)
            else:
                parts.append(o)
        return Silhouette(tuple(parts), tuple(cuts), self.name, dict(self.landmarks))


@dataclass(frozen=True)
class Pose:
    """Similarity transform shape -> image: scale, rotate (CCW), then shift."""

    scale: float = 1.0
    angle: float = 0.0
    shift: tuple[float, float] = (0.0, 0.0)

    def apply(self, x, y):
        c, s = math.cos(self.angle), math.sin(self.angle)
        x = np.asarray(x, dtype=float) * self.scale
        y = np.asarray(y, dtype=float) * self.scale
        return c * x - s * y + self.shift[0], s * x + c * y + self.shift[1]

    def invert(self, X, Y):
        c, s = math.cos(self.angle), math.sin(self.angle)
        X = np.asarray(X, dtype=float) - self.shift[0]
        Y = np.asarray(Y, dtype=float) - self.shift[1]
        return (c * X + s * Y) / self.scale, (-s * X + c * Y) / self.scale


def rasterize(shape: Silhouette, pose: Pose = Pose(), margin: int = 6):
    """Foreground raster (row 0 at the top) and the image-from-shape pose used.

    The raster is sized to the transformed bounding box plus ``margin``; the
    returned pose includes the translation that places the shape in it.
    """
    x0, y0, x1, y1 = shape.bbox()
    cx, cy = pose.apply([x0, x1, x0, x1], [y0, y0, y1, y1])
    lo_x, hi_x = math.floor(cx.min()) - margin, math.ceil(cx.max()) + margin
    lo_y, hi_y = math.floor(cy.min()) - margin, math.ceil(cy.max()) + margin
    w, h = hi_x - lo_x + 1, hi_y - lo_y + 1
    placed = Pose(pose.scale, pose.angle, (pose.shift[0] - lo_x, pose.shift[1] - lo_y))
    X, Y = np.meshgrid(np.arange(w, dtype=float), np.arange(h, dtype=float))
    sx, sy = placed.invert(X, Y)
    fg = shape.contains(sx, sy)
    # image y points up, raster rows point down
    return fg[::-1].copy(), placed
