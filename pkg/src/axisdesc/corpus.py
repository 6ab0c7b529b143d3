"""Synthetic silhouette corpus: parametric shape families with seeded jitter.

Every family is a function ``f(rng) -> Silhouette``; with ``rng=None`` it
returns the family's canonical member. ``generate_corpus`` rasterises a
fixed number of jittered members per family under random similarity poses
and writes them as PGM files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from PIL import Image

from .shapes import Capsule, Disk, Ellipse, Polygon, Pose, Silhouette, rasterize, regular_polygon

D = math.radians


def _j(rng, spread):
    """Uniform jitter in [-spread, spread]; zero for the canonical member."""
    return 0.0 if rng is None else float(rng.uniform(-spread, spread))


def _sj(rng, spread=0.1):
    return 1.0 + _j(rng, spread)


def _limb(x, y, angle, length, r0, r1=None):
    return Capsule(x, y, x + length * math.cos(angle), y + length * math.sin(angle), r0, r1)


# --------------------------------------------------------------------------
# hands


HAND_FINGER_ANGLES = (150.0, 112.0, 90.0, 68.0, 45.0)
HAND_FINGER_LENGTHS = (38.0, 50.0, 55.0, 50.0, 40.0)


def hand(
    rng=None,
    finger_angles: tuple[float, ...] | None = None,
    missing: int | None = None,
    lengths: tuple[float, ...] = HAND_FINGER_LENGTHS,
) -> Silhouette:
    """Palm, wrist and five fingers (thumb first); angles in degrees.

    ``landmarks`` holds each finger's base and tip in shape coordinates,
    keyed ``finger<i>_base`` / ``finger<i>_tip``.
    """
    angles = list(HAND_FINGER_ANGLES if finger_angles is None else finger_angles)
    palm = Ellipse(0.0, 0.0, 30.0 * _sj(rng, 0.05), 36.0 * _sj(rng, 0.05))
    parts = [palm, Capsule(0.0, -30.0, 0.0, -75.0 * _sj(rng, 0.08), 20.0, 19.0)]
    marks = {}
    for i, (ang, L) in enumerate(zip(angles, lengths)):
        if missing == i:
            continue
        a = D(ang + _j(rng, 6.0))
        base_ang = D(HAND_FINGER_ANGLES[i])
        bx, by = (-26.0, 5.0) if i == 0 else (26.0 * math.cos(base_ang), 32.0 * math.sin(base_ang))
        L = L * _sj(rng, 0.08)
        parts.append(_limb(bx, by, a, L, 7.0, 6.0))
        marks[f"finger{i}_base"] = (bx, by)
        marks[f"finger{i}_tip"] = (bx + L * math.cos(a), by + L * math.sin(a))
    return Silhouette(tuple(parts), name="hand", landmarks=marks)


def articulated_hand(finger: int = 2, delta_deg: float = 20.0) -> Silhouette:
    angles = list(HAND_FINGER_ANGLES)
    angles[finger] += delta_deg
    return hand(finger_angles=tuple(angles))


def claw(rng=None) -> Silhouette:
    palm = Ellipse(0.0, 0.0, 34.0 * _sj(rng, 0.05), 28.0 * _sj(rng, 0.05))
    parts = [palm, Capsule(0.0, -20.0, 0.0, -70.0 * _sj(rng, 0.08), 16.0, 14.0)]
    for ang in (125.0, 90.0, 55.0):
        a = D(ang + _j(rng, 6.0))
        parts.append(_limb(30.0 * math.cos(a), 24.0 * math.sin(a), a, 55.0 * _sj(rng), 11.0, 5.0))
    return Silhouette(tuple(parts), name="claw")


# --------------------------------------------------------------------------
# animals and figures


def quadruped(rng=None) -> Silhouette:
    L = 70.0 * _sj(rng, 0.06)
    body = Ellipse(0.0, 0.0, L, 26.0 * _sj(rng, 0.06))
    parts = [body]
    for x in (-0.7 * L, -0.45 * L, 0.45 * L, 0.7 * L):
        a = D(-90.0 + _j(rng, 8.0))
        parts.append(_limb(x, -10.0, a, 55.0 * _sj(rng), 8.0, 6.0))
    neck = D(40.0 + _j(rng, 8.0))
    hx, hy = L * 0.85 + 35.0 * math.cos(neck), 35.0 * math.sin(neck)
    parts.append(Capsule(L * 0.8, 5.0, hx, hy, 12.0, 11.0))
    parts.append(Ellipse(hx + 12.0, hy + 2.0, 22.0, 12.0, D(-15.0)))
    parts.append(_limb(-L * 0.95, 5.0, D(160.0 + _j(rng, 10.0)), 45.0 * _sj(rng), 6.0, 3.0))
    return Silhouette(tuple(parts), name="quadruped")


def human(rng=None) -> Silhouette:
    torso = Ellipse(0.0, 0.0, 24.0 * _sj(rng, 0.06), 48.0 * _sj(rng, 0.05))
    parts = [torso, Disk(0.0, 70.0 * _sj(rng, 0.03), 18.0), Capsule(0.0, 40.0, 0.0, 60.0, 9.0)]
    for side in (-1, 1):
        a = D(90.0 - side * (120.0 + _j(rng, 10.0)))
        parts.append(_limb(side * 18.0, 32.0, a, 70.0 * _sj(rng), 8.0, 6.0))
        a = D(-90.0 + side * (12.0 + _j(rng, 5.0)))
        parts.append(_limb(side * 11.0, -35.0, a, 85.0 * _sj(rng), 11.0, 8.0))
    return Silhouette(tuple(parts), name="human")


def fish(rng=None) -> Silhouette:
    L = 75.0 * _sj(rng, 0.06)
    H = 32.0 * _sj(rng, 0.08)
    parts = [Ellipse(0.0, 0.0, L, H)]
    t = L * 0.85
    spread = 40.0 * _sj(rng, 0.12)
    tail = Polygon(((t, 0.0), (t + 50.0, spread), (t + 40.0, 0.0), (t + 50.0, -spread)))
    parts.append(tail)
    parts.append(Polygon(((-10.0, H * 0.8), (15.0, H + 28.0 * _sj(rng)), (30.0, H * 0.7))))
    return Silhouette(tuple(parts), name="fish")


def bird(rng=None) -> Silhouette:
    body = Ellipse(0.0, 0.0, 55.0 * _sj(rng, 0.06), 20.0 * _sj(rng, 0.06))
    parts = [body, Disk(58.0, 10.0, 14.0), Polygon(((68.0, 16.0), (92.0, 8.0), (70.0, 4.0)))]
    for side in (-1, 1):
        a = D(90.0 * side + _j(rng, 8.0) + 10.0)
        parts.append(_limb(5.0, 0.0, a, 85.0 * _sj(rng), 14.0, 5.0))
    spread = 22.0 * _sj(rng, 0.15)
    parts.append(Polygon(((-45.0, 0.0), (-95.0, spread), (-95.0, -spread))))
    return Silhouette(tuple(parts), name="bird")


def airplane(rng=None) -> Silhouette:
    L = 95.0 * _sj(rng, 0.05)
    parts = [Capsule(-L, 0.0, L, 0.0, 12.0)]
    sweep = _j(rng, 6.0)
    span = 90.0 * _sj(rng, 0.06)
    for side in (-1, 1):
        parts.append(Polygon(((15.0, 0.0), (-20.0 - sweep, side * span), (-38.0 - sweep, side * span), (-18.0, 0.0))))
        parts.append(Polygon(((-L + 20.0, 0.0), (-L - 4.0, side * 35.0), (-L - 14.0, side * 35.0), (-L + 2.0, 0.0))))
    return Silhouette(tuple(parts), name="airplane")


# --------------------------------------------------------------------------
# tools and vessels


def vase(rng=None, neck: float = 6.0) -> Silhouette:
    """Round body, a thin neck of half-width ``neck`` and a flared lip."""
    R = 45.0 * _sj(rng, 0.06)
    neck_len = 40.0 * _sj(rng, 0.1)
    parts = [
        Ellipse(0.0, 0.0, R, R * 1.1),
        Capsule(0.0, R, 0.0, R + neck_len, neck * _sj(rng, 0.1)),
        Ellipse(0.0, R + neck_len + 8.0, 26.0 * _sj(rng, 0.1), 11.0),
    ]
    return Silhouette(tuple(parts), name="vase")


def peanut(rng=None) -> Silhouette:
    """Two unequal lobes joined by a thick waist."""
    r1 = 42.0 * _sj(rng, 0.06)
    r2 = 32.0 * _sj(rng, 0.06)
    gap = 60.0 * _sj(rng, 0.06)
    parts = [Disk(-gap / 2, 0.0, r1), Disk(gap / 2 + 10.0, 0.0, r2), Capsule(-gap / 2, 0.0, gap / 2, 0.0, 24.0 * _sj(rng, 0.08))]
    return Silhouette(tuple(parts), name="peanut")


def dog_bone(rng=None, neck: float = 8.0, lobe: float = 34.0, gap: float = 130.0) -> Silhouette:
    """Two equal disks joined by a long thin bar."""
    return Silhouette(
        (Disk(-gap / 2, 0.0, lobe), Disk(gap / 2, 0.0, lobe), Capsule(-gap / 2, 0.0, gap / 2, 0.0, neck)),
        name="dog-bone",
    )


def hammer(rng=None) -> Silhouette:
    L = 110.0 * _sj(rng, 0.08)
    head_w = 70.0 * _sj(rng, 0.08)
    off = _j(rng, 8.0)
    parts = [
        Capsule(0.0, -L, 0.0, 0.0, 9.0),
        Polygon(((-head_w - off, -5.0), (head_w - off, -5.0), (head_w - off, 24.0), (-head_w - off, 24.0))),
    ]
    return Silhouette(tuple(parts), name="hammer")


# --------------------------------------------------------------------------
# geometric


def star(n: int, rng=None, arm: float = 80.0, width: float = 13.0) -> Silhouette:
    parts = [Disk(0.0, 0.0, width * 1.8)]
    for k in range(n):
        a = 2 * math.pi * k / n + D(_j(rng, 6.0)) + math.pi / 2
        parts.append(_limb(0.0, 0.0, a, arm * _sj(rng), width * _sj(rng, 0.08), width * 0.6))
    return Silhouette(tuple(parts), name=f"star{n}")


def star3(rng=None) -> Silhouette:
    return star(3, rng)


def star5(rng=None) -> Silhouette:
    return star(5, rng, arm=75.0, width=11.0)


def cross(rng=None) -> Silhouette:
    """Latin cross: a long lower arm, three short ones."""
    w = 14.0 * _sj(rng, 0.08)
    parts = [
        Polygon(((-w, -110.0 * _sj(rng, 0.06)), (w, -110.0), (w, 50.0 * _sj(rng)), (-w, 50.0))),
        Polygon(((-55.0 * _sj(rng), -w + 10.0), (55.0 * _sj(rng), -w + 10.0), (55.0, w + 10.0), (-55.0, w + 10.0))),
    ]
    return Silhouette(tuple(parts), name="cross")


def ellipse(rng=None) -> Silhouette:
    return Silhouette((Ellipse(0.0, 0.0, 80.0 * _sj(rng, 0.06), 42.0 * _sj(rng, 0.08)),), name="ellipse")


def square(side: float = 100.0) -> Silhouette:
    h = side / 2
    return Silhouette((Polygon(((-h, -h), (h, -h), (h, h), (-h, h))),), name="square")


def rectangle(w: float = 140.0, h: float = 70.0) -> Silhouette:
    return Silhouette((Polygon(((-w / 2, -h / 2), (w / 2, -h / 2), (w / 2, h / 2), (-w / 2, h / 2))),), name="rectangle")


def disk(r: float = 50.0) -> Silhouette:
    return Silhouette((Disk(0.0, 0.0, r),), name="disk")


def triangle(r: float = 80.0) -> Silhouette:
    return Silhouette((regular_polygon(0.0, 0.0, r, 3, math.pi / 2),), name="triangle")


# --------------------------------------------------------------------------
# corpus


FAMILIES: dict[str, Callable] = {
    "airplane": airplane,
    "bird": bird,
    "claw": claw,
    "cross": cross,
    "ellipse": ellipse,
    "fish": fish,
    "hammer": hammer,
    "hand": hand,
    "human": human,
    "peanut": peanut,
    "quadruped": quadruped,
    "star3": star3,
    "star5": star5,
    "vase": vase,
}


@dataclass(frozen=True)
class CorpusItem:
    shape_id: str
    category: str
    silhouette: Silhouette
    pose: Pose


def corpus_items(per_category: int = 4, seed: int = 0, scale=(0.85, 1.2)) -> list[CorpusItem]:
    """Jittered members of every family under random rotation and scale."""
    out = []
    for ci, name in enumerate(sorted(FAMILIES)):
        for k in range(per_category):
            rng = np.random.default_rng([seed, ci, k])
            sil = FAMILIES[name](rng)
            pose = Pose(float(rng.uniform(*scale)), float(rng.uniform(0.0, 2 * math.pi)))
            out.append(CorpusItem(f"{name}-{k}", name, sil, pose))
    return out


def to_gray(fg: np.ndarray) -> np.ndarray:
    """Dark shape on a light ground, as 8-bit gray."""
    return np.where(fg, 0, 255).astype(np.uint8)


def write_pgm(fg: np.ndarray, path) -> None:
    Image.fromarray(to_gray(fg), mode="L").save(path, format="PPM")


def generate_corpus(out_dir, per_category: int = 4, seed: int = 0) -> list[tuple[str, str, Path]]:
    """Write ``<id>.pgm`` files and a ``labels.txt`` (``id category`` lines)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for item in corpus_items(per_category, seed):
        fg, _ = rasterize(item.silhouette, item.pose)
        path = out / f"{item.shape_id}.pgm"
        write_pgm(fg, path)
        rows.append((item.shape_id, item.category, path))
    (out / "labels.txt").write_text("".join(f"{i} {c}\n" for i, c, _ in rows), encoding="utf-8")
    return rows
